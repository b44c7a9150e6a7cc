import pytest

from tabaudit.contam import MatchEvidence, ScanConfig, build_index, scan_dataset
from tabaudit.data import Dataset, TaskSpec, TaskType
from tabaudit.errors import InputError
from tabaudit.tableio import read_table
from tabaudit.testbed import (
    CorpusSpec,
    PlantLedger,
    generate_corpus,
    merge_ledgers,
    plant_association,
    plant_complete_overlap,
    plant_direct_duplicates,
    scanner_prf,
)


def corpus_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(root.glob("*.csv"))}


def test_generate_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    spec = CorpusSpec(tables=2, rows_per_table=10)
    generate_corpus(spec, seed=1, out_dir=a)
    generate_corpus(spec, seed=1, out_dir=b)
    assert corpus_bytes(a) == corpus_bytes(b)
    c = tmp_path / "c"
    generate_corpus(spec, seed=2, out_dir=c)
    assert corpus_bytes(a) != corpus_bytes(c)


def test_generate_row_counts(tmp_path):
    out = tmp_path / "corpus"
    generate_corpus(CorpusSpec(tables=5, rows_per_table=17, cols_per_table=3), 0, out)
    total = 0
    for path in out.glob("*.csv"):
        columns, rows = read_table(path)
        assert len(columns) == 3
        total += len(rows)
    assert total == 5 * 17


def small_dataset(n=12):
    rows = tuple((f"id{i}", f"val{i}.5x", f"w{i * 13}", "a" if i % 2 else "b") for i in range(n))
    task = TaskSpec("small", TaskType.BINARY, "lab", ("a", "b"))
    return Dataset("small", ("rowid", "metric", "weight", "lab"), rows), task


def test_plant_complete_ledger_and_readback(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    dataset, _ = small_dataset()
    ledger = plant_complete_overlap(corpus, dataset, rename_fraction=1.0, permute=True, seed=3)
    plant = ledger.plants[0]
    assert plant.kind == "complete"
    assert len(plant.locations) == dataset.row_count
    table_id = plant.locations[0][0]
    columns, rows = read_table(corpus / table_id)
    # Every renamed column differs but every row's value multiset is intact.
    assert set(columns).isdisjoint(set(dataset.columns))
    for i, row in enumerate(dataset.rows):
        assert sorted(map(str, rows[i])) == sorted(map(str, row))


def test_plant_complete_rename_zero_keeps_names(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    dataset, _ = small_dataset()
    ledger = plant_complete_overlap(corpus, dataset, rename_fraction=0.0, permute=False, seed=3)
    table_id = ledger.plants[0].locations[0][0]
    columns, rows = read_table(corpus / table_id)
    assert tuple(columns) == dataset.columns
    assert tuple(tuple(r) for r in rows) == dataset.rows


def test_plant_753_locations(tmp_path, labor_fixture):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    dataset, _ = labor_fixture
    ledger = plant_complete_overlap(corpus, dataset, seed=5)
    assert len(ledger.plants[0].locations) == 753


def test_plant_direct_duplicates_counts(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    dataset, task = small_dataset()
    rows = []
    for i in range(10):
        record = dataset.record(i)
        label = record.pop("lab")
        rows.append((record, label))
    ledger = plant_direct_duplicates(corpus, rows, "lab", copies=3, seed=1, dataset_id="small")
    plant = ledger.plants[0]
    assert len(plant.locations) == 30
    assert len({t for t, _ in plant.locations}) == 3


def test_plant_direct_duplicates_copies_one(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    ledger = plant_direct_duplicates(corpus, [({"a": "x9"}, "y")], "lab", copies=1, seed=1)
    assert len(ledger.plants[0].locations) == 1


def test_plant_association_no_rows():
    with pytest.raises(InputError):
        plant_association("/nonexistent", [("k", "v")], tables=0)


def test_ledger_roundtrip(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    dataset, _ = small_dataset()
    l1 = plant_complete_overlap(corpus, dataset, seed=2)
    l2 = plant_association(corpus, [("k", "v")], tables=2, rows_per_table=2, seed=2)
    merged = merge_ledgers("corpus", 2, l1, l2)
    merged.save(tmp_path / "ledger.json")
    loaded = PlantLedger.load(tmp_path / "ledger.json")
    assert loaded.seed == merged.seed
    assert loaded.plants == merged.plants


def test_ledger_completeness_physical_readback(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    dataset, _ = small_dataset()
    ledger = plant_complete_overlap(corpus, dataset, seed=8)
    for table_id, row_id in ledger.plants[0].locations:
        columns, rows = read_table(corpus / table_id)
        assert 0 <= row_id < len(rows)


# -- scanner precision/recall ------------------------------------------------------


def ev(*locations, strategy="row_match"):
    return MatchEvidence(strategy=strategy, matched=list(locations), overlap=1.0)


def test_prf_perfect():
    ledger = PlantLedger(seed=0, corpus_id="c")
    from tabaudit.testbed import Plant

    ledger.plants.append(Plant("complete", "d", (("t.csv", 0), ("t.csv", 1)), {}))
    evidence = {"d": [ev(("t.csv", 0)), ev(("t.csv", 1))]}
    assert scanner_prf(ledger, evidence) == {"complete": (1.0, 1.0)}


def test_prf_nothing_found():
    from tabaudit.testbed import Plant

    ledger = PlantLedger(seed=0, corpus_id="c")
    ledger.plants.append(Plant("complete", "d", (("t.csv", 0),), {}))
    assert scanner_prf(ledger, {"d": []}) == {"complete": (0.0, 0.0)}


def test_prf_one_spurious_hit():
    from tabaudit.testbed import Plant

    ledger = PlantLedger(seed=0, corpus_id="c")
    planted = tuple(("t.csv", i) for i in range(9))
    ledger.plants.append(Plant("complete", "d", planted, {}))
    evidence = {"d": [ev(*planted), ev(("other.csv", 3))]}
    precision, recall = scanner_prf(ledger, evidence)["complete"]
    assert (precision, recall) == (0.9, 1.0)


def test_scanner_vs_ledger_end_to_end(tmp_path):
    corpus = tmp_path / "corpus"
    generate_corpus(CorpusSpec(tables=2, rows_per_table=50), seed=6, out_dir=corpus)
    dataset, task = small_dataset()
    ledger = plant_complete_overlap(corpus, dataset, rename_fraction=1.0, permute=True, seed=6)
    index = build_index(corpus)
    bundle, verdict = scan_dataset(index, dataset, task, ScanConfig())
    prf = scanner_prf(ledger, {dataset.id: bundle.row_evidence})
    assert prf["complete"] == (1.0, 1.0)
    assert verdict.category == "complete_overlap"
