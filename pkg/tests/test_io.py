import json

import numpy as np
import pytest

from core.cp import LindbladSystem, Supergenerator
from core.errors import InputError
from core.io import (
    RunManifest,
    config_digest,
    dataset_from_json,
    dataset_to_json,
    generator_from_json,
    generator_to_json,
    lindblads_from_json,
    lindblads_to_json,
    load_fixtures,
    load_json,
    load_yaml,
    matrix_from_json,
    matrix_to_json,
    write_json,
)
from core.liouville import PAULI, transition_basis
from core.synth import random_kite_generator, simulate_state_dataset


def test_matrix_json_layout():
    m = np.array([[1, 2j], [3, 4]])
    obj = matrix_to_json(m)
    assert obj["rows"] == 2 and obj["cols"] == 2
    assert obj["data"][1] == [0.0, 2.0]
    assert np.array_equal(matrix_from_json(obj), m)


@pytest.mark.parametrize("obj", [
    [[1, 0]],
    {"rows": 2, "cols": 2, "data": [[1, 0]]},
    {"rows": 0, "cols": 1, "data": []},
    {"rows": 1, "cols": 1, "data": [["a", 0]]},
])
def test_matrix_json_rejects_malformed(obj):
    with pytest.raises(InputError):
        matrix_from_json(obj)


def test_generator_json_round_trip(reference_hamiltonian):
    g = random_kite_generator(0.3, seed=1, hamiltonian=reference_hamiltonian).in_basis("transition")
    back = generator_from_json(json.loads(json.dumps(generator_to_json(g))))
    assert back.basis == "transition"
    assert np.allclose(back.generator(), g.generator())
    assert np.allclose(back.hamiltonian, reference_hamiltonian)


def test_generator_json_without_hamiltonian_matrix():
    g = Supergenerator.from_hamiltonian(PAULI["Z"], np.zeros((4, 4)))
    obj = generator_to_json(g)
    del obj["hamiltonian"]
    back = generator_from_json(obj)
    assert np.allclose(back.hamiltonian_part, g.hamiltonian_part)
    with pytest.raises(InputError):
        generator_from_json({**generator_to_json(g), "n": 3})
    with pytest.raises(InputError):
        generator_from_json({"basis": "zeeman"})


def test_state_dataset_json_round_trip(reference_hamiltonian):
    g = random_kite_generator(0.3, seed=2, hamiltonian=reference_hamiltonian)
    ds = simulate_state_dataset(g, [0.4, 0.8], transition_basis())
    back = dataset_from_json(json.loads(json.dumps(dataset_to_json(ds))))
    assert back.kind == "state_pairs"
    assert back.times == ds.times
    assert np.allclose(back.superpropagators()[1], ds.superpropagators()[1])
    with pytest.raises(InputError):
        dataset_from_json({"n": 4, "times": [1.0]})


def test_lindblads_json_round_trip():
    ls = LindbladSystem([PAULI["X"], PAULI["Z"]], [0.5, 0.25], ["hadamard_t1", "hadamard_t2_adiabatic"])
    back = lindblads_from_json(lindblads_to_json(ls))
    assert back.weights == ls.weights
    assert back.provenance == ls.provenance
    assert np.allclose(back.operators[1], PAULI["Z"])


def test_config_digest_is_canonical():
    assert config_digest({"a": 1, "b": [1, 2]}) == config_digest({"b": [1, 2], "a": 1})
    assert config_digest({"a": 1}) != config_digest({"a": 2})


def test_write_json_embeds_manifest(tmp_path):
    manifest = RunManifest(command="estimate", inputs=["ds.json"], config={"method": "cpfit"})
    manifest.finish({"steps": {"total": 1}})
    path = tmp_path / "out" / "report.json"
    write_json(str(path), {"value": np.float64(1.5), "flag": np.bool_(True), "m": np.eye(2)}, manifest)
    obj = load_json(str(path))
    assert obj["value"] == 1.5 and obj["flag"] is True
    assert np.allclose(matrix_from_json(obj["m"]), np.eye(2))
    assert obj["manifest"]["config_digest"] == config_digest({"method": "cpfit"})
    assert obj["manifest"]["finished"] is not None


def test_load_errors(tmp_path):
    with pytest.raises(InputError):
        load_json(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InputError):
        load_json(str(bad))
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(InputError):
        load_yaml(str(listing))
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    assert load_yaml(str(empty)) == {}


def test_fixtures_load(dbt):
    assert dbt["r_t1_zee"].shape == (4, 4)
    assert dbt["adiabatic_eigenvalues"].tolist() == [0.9560, 0.2913, 0.1721]
    assert float(dbt["nonadiabatic_rate"]) == pytest.approx(0.3312)


def test_fixture_file_loader(tmp_path):
    path = tmp_path / "fx.yaml"
    path.write_text("a:\n  provenance: test\n  matrix: [[1, 2], [3, 4]]\nb: 2.5\nc: text\n")
    fx = load_fixtures(str(path))
    assert fx["a"].shape == (2, 2)
    assert "c" not in fx
