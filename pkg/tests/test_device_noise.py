import math

import pytest

from noisy_vqo.device_noise import (
    GateKindSpec,
    NoiseTable,
    ingest_noise_table,
    noise_table_from_dict,
)
from noisy_vqo.errors import ConfigError


def test_defaults_match_reference_values():
    table = NoiseTable()
    assert table.t1 == 55.0 and table.t2 == 68.0
    assert table.gate("single-qubit") == GateKindSpec(1e-3, 0.08)
    assert table.gate("two-qubit") == GateKindSpec(4e-2, 0.7)
    assert table.gate("u1") == GateKindSpec(0.0, 0.0)
    assert table.gate("u2") == GateKindSpec(1e-3, 0.08)
    assert table.gate("u3") == GateKindSpec(3e-3, 0.08)
    assert table.gate("cnot") == GateKindSpec(4e-2, 0.7)


def test_scaling_rule():
    table = NoiseTable().scaled(4.0)
    assert table.t1 == pytest.approx(13.75)
    assert table.t2 == pytest.approx(17.0)
    assert table.gate("single-qubit").error == pytest.approx(4e-3)
    assert table.gate("two-qubit").error == pytest.approx(0.16)
    # gate durations unchanged
    assert table.gate("single-qubit").time == 0.08
    assert table.gate("two-qubit").time == 0.7


def test_zero_scale_silences_noise():
    table = NoiseTable().scaled(0.0)
    assert table.gate("two-qubit").error == 0.0
    assert math.isinf(table.t1_list(3)[0])


def test_per_qubit_lists():
    table = NoiseTable(t1=(50.0, 60.0, 70.0), t2=(60.0, 65.0, 80.0))
    assert table.t1_list(3) == (50.0, 60.0, 70.0)
    with pytest.raises(ConfigError):
        table.t1_list(4)
    broadcast = NoiseTable()
    assert broadcast.t2_list(4) == (68.0,) * 4


def test_validation_errors():
    with pytest.raises(ConfigError):
        NoiseTable(t1=-1.0)
    with pytest.raises(ConfigError):
        NoiseTable(t1=10.0, t2=21.0)  # T2 > 2 T1
    with pytest.raises(ConfigError):
        NoiseTable(gates=(("warp", GateKindSpec(0.1, 0.1)),))
    with pytest.raises(ConfigError):
        NoiseTable(gates=(("cnot", GateKindSpec(-0.1, 0.1)),))
    with pytest.raises(ConfigError):
        NoiseTable().scaled(-2.0)
    # scaling can push T2 > 2 T1 only via inconsistent inputs; ratio preserved
    NoiseTable(t1=10.0, t2=20.0).scaled(10.0)


def test_dict_ingestion():
    table = noise_table_from_dict(
        {"t1": 50.0, "t2": 70.0, "gates": {"cnot": {"error": 0.02}}, "scale": 2.0}
    )
    assert table.t1 == pytest.approx(25.0)
    assert table.gate("two-qubit").error == pytest.approx(0.04)  # cnot alias
    assert table.scale == 2.0
    with pytest.raises(ConfigError):
        noise_table_from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        noise_table_from_dict({"gates": {"warp": {}}})
    with pytest.raises(ConfigError):
        noise_table_from_dict({"gates": {"cnot": 5}})


def test_file_ingestion(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text("")
    assert ingest_noise_table(str(empty)) == NoiseTable()

    path = tmp_path / "table.json"
    path.write_text('{"gates": {"u1": {}}, "scale": 4}')
    table = ingest_noise_table(str(path))
    assert table.gate("u1").error == 0.0
    assert table.t1 == pytest.approx(13.75)

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        ingest_noise_table(str(bad))
    with pytest.raises(ConfigError):
        ingest_noise_table(str(tmp_path / "missing.json"))
