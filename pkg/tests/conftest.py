from types import SimpleNamespace

import pytest

from prosoctl.afp import TrainConfig, afp_train
from prosoctl.demo import make_demo_corpus
from prosoctl.pipeline import (compute_all_stats, extract_corpus, load_corpus,
                               normalize_records)

# one ready-to-use corpus per test session: 20 synthesized utterances,
# measured back through the analysis stack, with stats and a trained predictor
CORPUS_SEED = 7
TRAIN_SEED = 1


@pytest.fixture(scope="session")
def demo_env(tmp_path_factory):
    root = tmp_path_factory.mktemp("demo_corpus")
    made = make_demo_corpus(root, n_utterances=20, seed=CORPUS_SEED)
    utts = load_corpus(root / "align")
    records = extract_corpus(utts, root / "wav")
    stats = compute_all_stats(records)
    normalize_records(records, stats)
    return SimpleNamespace(root=root, made=made, utts=utts, records=records, stats=stats)


@pytest.fixture(scope="session")
def trained_ckpt(demo_env):
    cfg = TrainConfig(max_iterations=2500, seed=TRAIN_SEED)
    ckpt, _ = afp_train(demo_env.records, cfg)
    return ckpt


_acceptance_results = []


def record_acceptance(name: str, passed: bool, detail: str = ""):
    _acceptance_results.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _acceptance_results:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
