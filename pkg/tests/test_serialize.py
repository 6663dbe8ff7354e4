"""Round-trip fidelity and byte-level determinism of the output writers."""

import json
import math
import os

import numpy as np
import pytest

import henckylab as hl
from henckylab import serialize as ser
from henckylab.errors import DomainError

P0 = hl.MaterialParams()


def test_float_formatting_round_trips():
    values = [1.0 / 3.0, math.pi, 7.045000664682952, 1e-300, -0.0, 2.572209372642415e-56]
    for x in values:
        assert float(ser.dumps_json(x)) == x


def test_special_float_tokens():
    assert ser.dumps_json(math.inf) == "Infinity"
    assert ser.dumps_json(-math.inf) == "-Infinity"
    assert ser.dumps_json(math.nan) == "NaN"
    parsed = json.loads(ser.dumps_json({"a": math.inf, "b": math.nan}))
    assert parsed["a"] == math.inf and math.isnan(parsed["b"])


def test_json_types():
    doc = {"s": "x", "i": 3, "b": True, "n": None, "arr": np.arange(3.0), "empty": []}
    parsed = json.loads(ser.dumps_json(doc))
    assert parsed == {"s": "x", "i": 3, "b": True, "n": None, "arr": [0.0, 1.0, 2.0], "empty": []}
    with pytest.raises(DomainError):
        ser.dumps_json({1: "non-string key"})
    with pytest.raises(DomainError):
        ser.dumps_json(object())


def test_mesh_round_trip(tmp_path):
    mesh = hl.retag_boundary(
        hl.make_rect_mesh(3, 2, 2.0, 1.0),
        lambda xi, xj: hl.BoundaryTag.NEUMANN
        if xi[1] > 0.999 and xj[1] > 0.999
        else hl.BoundaryTag.DIRICHLET,
    )
    path = str(tmp_path / "mesh.json")
    ser.write_json(path, ser.mesh_to_dict(mesh))
    back = ser.mesh_from_dict(ser.read_json(path))
    assert np.array_equal(back.nodes, mesh.nodes)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert back.boundary == mesh.boundary


def test_field_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    field = rng.standard_normal((12, 2))
    path = str(tmp_path / "field.json")
    ser.write_json(path, ser.field_to_dict(field))
    back = ser.field_from_dict(ser.read_json(path))
    assert np.array_equal(back, field)  # 17 digits reproduce every bit
    with pytest.raises(DomainError):
        ser.field_from_dict({"nodal_values": [1.0, 2.0]})
    with pytest.raises(DomainError):
        ser.field_from_dict({})


def test_report_round_trip(tmp_path):
    mesh = hl.make_rect_mesh(4, 4, 1.0, 1.0)
    _, report = hl.solve(mesh, lambda x: 1.1 * x, P0)
    path = str(tmp_path / "report.json")
    ser.write_json(path, report.to_json_dict())
    back = ser.read_json(path)
    assert back["final_energy"] == report.final_energy
    assert back["iterations"] == report.iterations
    assert back["converged"] is report.converged
    assert tuple(back["energy_history"]) == report.energy_history


def test_malformed_mesh_document():
    with pytest.raises(DomainError):
        ser.mesh_from_dict({"nodes": [[0, 0]]})
    with pytest.raises(DomainError):
        ser.mesh_from_dict(
            {"nodes": [[0, 0], [1, 0], [0, 1]],
             "triangles": [[0, 1, 2]],
             "boundary": [[0, 1, "sliding"]]}
        )


def test_element_csv_layout():
    mesh = hl.make_rect_mesh(2, 1, 1.0, 1.0)
    A = np.array([[1.2, 0.0], [0.0, 1.0]])
    text = ser.element_table_csv(mesh, mesh.nodes @ A.T, P0)
    lines = text.split("\n")
    assert lines[0] == "element,energy_density,det_grad,dev_log_norm"
    assert lines[-1] == ""  # trailing LF
    assert len(lines) == 2 + len(mesh.triangles)
    first = lines[1].split(",")
    assert first[0] == "0"
    assert float(first[1]) == pytest.approx(hl.energy_eH(A, P0), rel=1e-15)
    assert float(first[2]) == pytest.approx(1.2, rel=1e-14)
    # all rows identical but for the index: the field is affine
    assert {ln.split(",", 1)[1] for ln in lines[1:-1]} == {lines[1].split(",", 1)[1]}


def test_writes_are_byte_identical_and_atomic(tmp_path):
    mesh = hl.make_rect_mesh(3, 3, 1.0, 1.0)
    field, report = hl.solve(mesh, lambda x: 1.05 * x, P0)
    for name, payload in (
        ("mesh.json", ser.mesh_to_dict(mesh)),
        ("field.json", ser.field_to_dict(field)),
        ("report.json", report.to_json_dict()),
    ):
        path = str(tmp_path / name)
        ser.write_json(path, payload)
        first = open(path, "rb").read()
        ser.write_json(path, payload)
        assert open(path, "rb").read() == first
    csv_path = str(tmp_path / "elements.csv")
    ser.write_element_csv(csv_path, mesh, field, P0)
    first = open(csv_path, "rb").read()
    ser.write_element_csv(csv_path, mesh, field, P0)
    assert open(csv_path, "rb").read() == first
    assert b"\r" not in first
    leftovers = [p for p in os.listdir(tmp_path) if p.startswith(".tmp-")]
    assert leftovers == []
