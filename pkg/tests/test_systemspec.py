"""System document parsing: schema errors, linear blocks, mode handling."""

import json

import numpy as np
import pytest

from saddlenf.errors import MathPreconditionError, SchemaError, SpectralGapError
from saddlenf.polycore import PolyField, PolySeries, hamiltonian_vector_field
from saddlenf.systemspec import (
    load_system_spec,
    parse_system_spec,
    quadratic_hamiltonian,
)

SPEC_DIR = "specs"


def saddle_doc():
    return {
        "schema_version": 1,
        "mode": "general",
        "roster": [
            {"name": "x", "class": "real_saddle", "eigenvalue": [1.0, 0.0], "sign_group": "u"},
            {"name": "y", "class": "real_saddle", "eigenvalue": [-1.0, 0.0], "sign_group": "s"},
        ],
        "N": {
            "trunc_degree": 4,
            "components": [
                {"terms": [{"exp": [0, 2], "re": 1.0}]},
                {"terms": []},
            ],
        },
        "R": {
            "trunc_degree": 4,
            "components": [
                {"terms": [{"exp": [3, 0], "re": 1.0}]},
                {"terms": []},
            ],
        },
        "seed": 7,
    }


def ham_doc():
    return {
        "schema_version": 1,
        "mode": "hamiltonian",
        "roster": [
            {
                "name": "x",
                "class": "real_saddle",
                "eigenvalue": [1.0, 0.0],
                "sign_group": "u",
                "sympl_partner": "y",
                "sympl_factor": [1.0, 0.0],
            },
            {
                "name": "y",
                "class": "real_saddle",
                "eigenvalue": [-1.0, 0.0],
                "sign_group": "s",
                "sympl_partner": "x",
                "sympl_factor": [-1.0, 0.0],
            },
        ],
        "N": {"trunc_degree": 4, "terms": [{"exp": [3, 0], "re": 1.0}]},
        "seed": 0,
    }


def test_parse_general_document():
    spec = parse_system_spec(saddle_doc())
    assert spec.mode == "general"
    assert spec.roster.names == ("x", "y")
    assert np.allclose(spec.linear, np.diag([1.0, -1.0]))
    assert isinstance(spec.N, PolyField)
    assert dict(spec.N.components[0].terms) == {(0, 2): pytest.approx(1.0)}
    assert isinstance(spec.R, PolyField)
    assert spec.seed == 7
    assert spec.trunc_degree == 4
    assert spec.bump is None
    assert spec.budget == {}
    # to_obj is the original document back
    assert spec.to_obj() == saddle_doc()


def test_full_field_combines_linear_and_nonlinear():
    spec = parse_system_spec(saddle_doc())
    F = spec.full_field()
    z = np.array([0.2, 0.3])
    # xdot = x + y^2, ydot = -y
    assert F.evaluate(z)[0] == pytest.approx(0.2 + 0.09)
    assert F.evaluate(z)[1] == pytest.approx(-0.3)
    with pytest.raises(MathPreconditionError):
        spec.full_hamiltonian()


def test_parse_hamiltonian_document():
    spec = parse_system_spec(ham_doc())
    assert isinstance(spec.N, PolySeries)
    H = spec.full_hamiltonian()
    # H = x*y + x^3, X_H = (x, -y - 3x^2)
    X = hamiltonian_vector_field(H, 4)
    assert dict(X.components[0].terms) == {(1, 0): pytest.approx(1.0)}
    assert dict(X.components[1].terms) == {
        (0, 1): pytest.approx(-1.0),
        (2, 0): pytest.approx(-3.0),
    }
    with pytest.raises(MathPreconditionError):
        spec.full_field()


def test_quadratic_hamiltonian_matches_roster_eigenvalues():
    spec = parse_system_spec(ham_doc())
    H2 = quadratic_hamiltonian(spec.roster)
    X2 = hamiltonian_vector_field(H2, 2)
    assert np.allclose(X2.linear_matrix(), np.diag([1.0, -1.0]))


def test_quadratic_hamiltonian_rejects_inconsistent_pairing():
    doc = ham_doc()
    doc["roster"][1]["eigenvalue"] = [-2.0, 0.0]
    with pytest.raises((MathPreconditionError, SpectralGapError)):
        spec = parse_system_spec(doc)
        quadratic_hamiltonian(spec.roster)


def test_missing_pairing_rejected_for_h2():
    spec = parse_system_spec(saddle_doc())
    with pytest.raises(MathPreconditionError, match="symplectic partner"):
        quadratic_hamiltonian(spec.roster)


def test_schema_version_is_checked():
    doc = saddle_doc()
    doc["schema_version"] = 2
    with pytest.raises(SchemaError, match="schema_version"):
        parse_system_spec(doc)
    del doc["schema_version"]
    with pytest.raises(SchemaError, match="schema_version"):
        parse_system_spec(doc)
    with pytest.raises(SchemaError, match="top level"):
        parse_system_spec([1, 2, 3])


def test_mode_and_roster_required():
    doc = saddle_doc()
    doc["mode"] = "dissipative"
    with pytest.raises(SchemaError, match="mode"):
        parse_system_spec(doc)
    doc = saddle_doc()
    del doc["roster"]
    with pytest.raises(SchemaError, match="roster"):
        parse_system_spec(doc)
    doc = saddle_doc()
    del doc["N"]
    with pytest.raises(SchemaError, match="'N'"):
        parse_system_spec(doc)


def test_term_errors_carry_field_paths():
    doc = saddle_doc()
    doc["N"]["components"][0]["terms"][0]["exp"] = [0, 2, 1]
    with pytest.raises(SchemaError) as err:
        parse_system_spec(doc, source="doc.json")
    assert "doc.json.N.components[0].terms[0]" in str(err.value)

    doc = saddle_doc()
    doc["N"]["components"][1]["terms"] = [{"exp": [0, 1], "re": 1.0}]
    with pytest.raises(SchemaError, match="degree < 2"):
        parse_system_spec(doc)

    doc = saddle_doc()
    doc["N"]["components"] = doc["N"]["components"][:1]
    with pytest.raises(SchemaError, match="exactly 2 components"):
        parse_system_spec(doc)


def test_hamiltonian_nonlinearity_starts_at_degree_three():
    doc = ham_doc()
    doc["N"]["terms"] = [{"exp": [2, 0], "re": 1.0}]
    with pytest.raises(SchemaError, match="degree < 3"):
        parse_system_spec(doc)


def test_trunc_degree_defaults_to_max_term_degree():
    doc = saddle_doc()
    del doc["N"]["trunc_degree"]
    del doc["R"]
    spec = parse_system_spec(doc)
    assert spec.trunc_degree == 2


def test_budget_and_seed_validation():
    doc = saddle_doc()
    doc["budget"] = {"k": 2, "Q": 13, "P": 15, "q": 16}
    spec = parse_system_spec(doc)
    assert spec.budget["q"] == 16
    doc["budget"] = {"k": 2, "R": 13}
    with pytest.raises(SchemaError, match="unknown key"):
        parse_system_spec(doc)
    doc["budget"] = {"k": 2.5}
    with pytest.raises(SchemaError, match="integer"):
        parse_system_spec(doc)
    doc = saddle_doc()
    doc["seed"] = "zero"
    with pytest.raises(SchemaError, match="seed"):
        parse_system_spec(doc)


def test_bump_block():
    doc = saddle_doc()
    doc["bump"] = {"r0": 0.5, "r1": 1.0, "sigma": 1.0, "profile": "radial"}
    spec = parse_system_spec(doc)
    assert spec.bump.r0 == 0.5 and spec.bump.r1 == 1.0
    doc["bump"] = {"r0": 1.0, "r1": 0.5}
    with pytest.raises(SchemaError, match=r"\.bump"):
        parse_system_spec(doc)


def test_jordan_block_override():
    doc = {
        "schema_version": 1,
        "roster": [
            {"name": "x1", "class": "real_saddle", "eigenvalue": [1.0, 0.0], "sign_group": "u"},
            {"name": "x2", "class": "real_saddle", "eigenvalue": [1.0, 0.0], "sign_group": "u"},
            {"name": "y", "class": "real_saddle", "eigenvalue": [-1.0, 0.0], "sign_group": "s"},
        ],
        "matrices": {"A_u": [[1.0, 1.0], [0.0, 1.0]]},
        "N": {
            "trunc_degree": 3,
            "components": [{"terms": []}, {"terms": []}, {"terms": []}],
        },
    }
    spec = parse_system_spec(doc)
    A = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]])
    assert np.allclose(spec.linear, A)


def test_matrix_block_validation():
    doc = saddle_doc()
    doc["matrices"] = {"A_u": [[-1.0]]}
    with pytest.raises(SpectralGapError, match="A_u is not unstable"):
        parse_system_spec(doc)

    doc = saddle_doc()
    doc["matrices"] = {"A_s": [[1.0]]}
    with pytest.raises(SpectralGapError, match="A_s is not stable"):
        parse_system_spec(doc)

    doc = saddle_doc()
    doc["matrices"] = {"A_u": [[2.0]]}
    with pytest.raises(MathPreconditionError, match="diagonal disagrees"):
        parse_system_spec(doc)

    doc = saddle_doc()
    doc["matrices"] = {"A_u": [[1.0, 2.0]]}
    with pytest.raises(SchemaError, match="1x1 matrix"):
        parse_system_spec(doc)

    doc = saddle_doc()
    doc["matrices"] = {"A_c": [[0.0]]}
    with pytest.raises(SchemaError, match="unknown matrix block"):
        parse_system_spec(doc)


def test_off_diagonal_only_couples_equal_eigenvalues():
    doc = {
        "schema_version": 1,
        "roster": [
            {"name": "x1", "class": "real_saddle", "eigenvalue": [1.0, 0.0], "sign_group": "u"},
            {"name": "x2", "class": "real_saddle", "eigenvalue": [2.0, 0.0], "sign_group": "u"},
            {"name": "y", "class": "real_saddle", "eigenvalue": [-1.0, 0.0], "sign_group": "s"},
        ],
        "matrices": {"A_u": [[1.0, 1.0], [0.0, 2.0]]},
        "N": {
            "trunc_degree": 3,
            "components": [{"terms": []}, {"terms": []}, {"terms": []}],
        },
    }
    with pytest.raises(MathPreconditionError, match="couples distinct eigenvalues"):
        parse_system_spec(doc)


def test_hamiltonian_mode_needs_diagonal_linear_part():
    doc = {
        "schema_version": 1,
        "mode": "hamiltonian",
        "roster": [
            {"name": "x1", "class": "real_saddle", "eigenvalue": [1.0, 0.0],
             "sign_group": "u", "sympl_partner": "y1", "sympl_factor": [1.0, 0.0]},
            {"name": "x2", "class": "real_saddle", "eigenvalue": [1.0, 0.0],
             "sign_group": "u", "sympl_partner": "y2", "sympl_factor": [1.0, 0.0]},
            {"name": "y1", "class": "real_saddle", "eigenvalue": [-1.0, 0.0],
             "sign_group": "s", "sympl_partner": "x1", "sympl_factor": [-1.0, 0.0]},
            {"name": "y2", "class": "real_saddle", "eigenvalue": [-1.0, 0.0],
             "sign_group": "s", "sympl_partner": "x2", "sympl_factor": [-1.0, 0.0]},
        ],
        "matrices": {"A_u": [[1.0, 1.0], [0.0, 1.0]]},
        "N": {"trunc_degree": 3, "terms": [{"exp": [3, 0, 0, 0], "re": 1.0}]},
    }
    with pytest.raises(MathPreconditionError, match="diagonal linear part"):
        parse_system_spec(doc)


def test_gap_property():
    doc = saddle_doc()
    doc["roster"].extend(
        [
            {"name": "c", "class": "complex_center", "eigenvalue": [0.0, 2.0],
             "conjugate": "cb", "sign_group": "c"},
            {"name": "cb", "class": "complex_center", "eigenvalue": [0.0, -2.0],
             "conjugate": "c", "sign_group": "c"},
        ]
    )
    for comp in doc["N"]["components"]:
        for t in comp["terms"]:
            t["exp"] = t["exp"] + [0, 0]
    doc["N"]["components"].extend([{"terms": []}, {"terms": []}])
    doc["R"]["components"][0]["terms"][0]["exp"] = [3, 0, 0, 0]
    doc["R"]["components"].extend([{"terms": []}, {"terms": []}])
    spec = parse_system_spec(doc)
    gap = spec.gap
    # centers are excluded from the hyperbolic gap
    assert gap.lam_min == gap.lam_max == 1.0
    assert gap.mu_min == gap.mu_max == 1.0

    center_only = {
        "schema_version": 1,
        "roster": doc["roster"][2:],
        "N": {"trunc_degree": 3, "components": [{"terms": []}, {"terms": []}]},
    }
    spec2 = parse_system_spec(center_only)
    with pytest.raises(SpectralGapError, match="hyperbolic"):
        spec2.gap


def test_load_system_spec_errors(tmp_path):
    with pytest.raises(SchemaError, match="cannot read"):
        load_system_spec(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{oops", encoding="utf-8")
    with pytest.raises(SchemaError, match="invalid JSON"):
        load_system_spec(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps(saddle_doc()), encoding="utf-8")
    spec = load_system_spec(good)
    assert spec.source == str(good)


def test_bundled_documents_parse():
    names = ["linear_saddle.json", "saddle1d.json", "saddle_coh.json", "tms.json"]
    for name in names:
        spec = load_system_spec(f"{SPEC_DIR}/{name}")
        assert spec.mode in ("general", "hamiltonian")
        assert spec.roster.n >= 2
        # every bundled document round-trips through its own raw form
        assert parse_system_spec(spec.to_obj()).roster.names == spec.roster.names
