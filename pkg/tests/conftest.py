import numpy as np
import pytest

from rarepath.learner import ForestParams, Tree, build_training_set, train_forest
from rarepath.scenario import (
    ScenarioConfig,
    SymptomKind,
    SymptomLink,
    SymptomSpec,
    SyndromeSpec,
    paper_scenario,
)
from rarepath.simulator import simulate_cohort

SEED = 42


@pytest.fixture(scope="session")
def paper_config():
    return paper_scenario(SEED)


@pytest.fixture(scope="session")
def paper_cohort(paper_config):
    return simulate_cohort(paper_config, [100] * 4, SEED)


@pytest.fixture(scope="session")
def small_forest(paper_cohort):
    data = build_training_set(paper_cohort, 30)
    return train_forest(data, ForestParams(tree_count=15), seed=7)


def tiny_config(horizon=5, prevalences=(0.3, 0.7)) -> ScenarioConfig:
    """Two syndromes, two permanent symptoms, deterministic onsets."""
    P = SymptomKind.PERMANENT_VISIBLE
    return ScenarioConfig(
        syndromes=(
            SyndromeSpec(0, "rare", True, prevalences[0]),
            SyndromeSpec(1, "common", False, prevalences[1]),
        ),
        symptoms=(SymptomSpec(0, "a", P), SymptomSpec(1, "b", P)),
        links=(
            SymptomLink(0, 0, 1.0, 1.0, 0.0),
            SymptomLink(0, 1, 1.0, 3.0, 0.0),
            SymptomLink(1, 0, 1.0, 2.0, 0.0),
            SymptomLink(1, 1, 0.0, 0.0, 0.0),
        ),
        horizon_days=horizon,
    )


def mixed_config(horizon=60) -> ScenarioConfig:
    """One rare and one common syndrome over the three symptom kinds."""
    kinds = [SymptomKind.LATENT, SymptomKind.PERMANENT_VISIBLE, SymptomKind.RECURRENT, SymptomKind.PERMANENT_VISIBLE]
    return ScenarioConfig(
        syndromes=(SyndromeSpec(0, "rare", True, 0.5), SyndromeSpec(1, "common", False, 0.5)),
        symptoms=tuple(SymptomSpec(i, f"s{i}", k) for i, k in enumerate(kinds)),
        links=(
            SymptomLink(0, 0, 0.8, 5.0, 2.0),
            SymptomLink(0, 2, 0.9, 10.0, 4.0, 0.3, 0.1),
            SymptomLink(0, 3, 0.7, 20.0, 5.0),
            SymptomLink(1, 1, 0.9, 8.0, 3.0),
            SymptomLink(1, 2, 0.5, 15.0, 6.0, 0.2, 0.05),
        ),
        horizon_days=horizon,
    )


def make_tree(nodes) -> Tree:
    """Tree from ``[feature, threshold, left, right, value]`` rows."""
    cols = list(zip(*nodes))
    return Tree(
        np.array(cols[0], dtype=np.int64),
        np.array(cols[1], dtype=np.float64),
        np.array(cols[2], dtype=np.int64),
        np.array(cols[3], dtype=np.int64),
        np.array(cols[4], dtype=np.float64),
    )


def naive_predict(forest, x) -> float:
    """Walk every tree node by node, straight from the definition."""
    total = 0.0
    for tree in forest.trees:
        node = 0
        while tree.feature[node] >= 0:
            node = tree.left[node] if x[tree.feature[node]] <= tree.threshold[node] else tree.right[node]
        total += tree.value[node]
    return total / len(forest.trees)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record a one-line PASS/FAIL verdict for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
