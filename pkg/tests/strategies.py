"""Hypothesis strategies shared by the property tests."""

from hypothesis import strategies as st

from bn2o.core.network import Evidence
from bn2o.experiments.generator import GeneratorConfig, generate_network


@st.composite
def networks(draw, max_diseases=6, max_findings=6):
    cfg = GeneratorConfig(
        n_diseases=draw(st.integers(1, max_diseases)),
        n_findings=draw(st.integers(1, max_findings)),
        seed=draw(st.integers(0, 2 ** 32)),
    )
    return generate_network(cfg)


@st.composite
def evidence_for(draw, n_findings):
    # each finding: unobserved, positive or negative
    marks = draw(st.lists(st.sampled_from("upn"), min_size=n_findings, max_size=n_findings))
    return Evidence.of(
        [i for i, m in enumerate(marks) if m == "p"],
        [i for i, m in enumerate(marks) if m == "n"],
    )


def all_evidence(n_findings):
    """Every one of the 3^n instantiations, as (positive, negative) Evidence."""
    for code in range(3 ** n_findings):
        positive, negative = [], []
        for i in range(n_findings):
            code, mark = divmod(code, 3)
            if mark == 1:
                positive.append(i)
            elif mark == 2:
                negative.append(i)
        yield Evidence.of(positive, negative)
