import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermsim.model import (
    HamiltonianTerm,
    ModelError,
    ModelSpec,
    ReservoirAttachment,
    build_hamiltonian,
    fermi_factor,
    load_model,
    parse_model,
    rate_at,
    rate_from_microscopic,
    serialize_model,
    total_number,
)
from fermsim.operators import commutator, fock_index
from fermsim.presets import DELTA, preset, preset_text

MINIMAL = "sites 1\nonsite 1 0.0\nreservoir src 1 1 1.0 1.0\n"


def test_minimal_model():
    spec = parse_model(MINIMAL)
    assert spec.n_sites == 1
    assert spec.terms == (HamiltonianTerm("onsite", (1,), 0.0),)
    assert spec.reservoirs == (ReservoirAttachment("src", (1, 1), 1.0, 1.0),)


def test_fig3_preset_contents():
    spec = preset("fig3")
    assert spec.n_sites == 5
    terms = {(t.kind, t.sites): t.strength for t in spec.terms}
    assert terms[("hop", (1, 2))] == terms[("hop", (3, 4))] == -math.sqrt(3) / 8
    assert terms[("density_density", (1, 3))] == terms[("density_density", (2, 4))] == 0.75
    assert terms[("density_density", (1, 4))] == terms[("density_density", (2, 3))] == 0.25
    assert terms[("density_density", (1, 5))] == 3.0
    assert all(terms[("onsite", (i,))] == 0.0 for i in range(1, 6))
    res = {r.name: r for r in spec.reservoirs}
    assert res["src"].jump_sites == res["drn"].jump_sites == (5, 5)
    assert (res["src"].fermi, res["src"].gamma) == (1.0, 1.0)
    assert (res["drn"].fermi, res["drn"].gamma) == (0.0, 1.0)
    assert spec.initial_fock == "10010"


GOLDEN_FIG3 = f"""\
sites 5
onsite 1 0.0
onsite 2 0.0
onsite 3 0.0
onsite 4 0.0
onsite 5 0.0
hop 1 2 {-math.sqrt(3) / 8!r}
hop 3 4 {-math.sqrt(3) / 8!r}
density 1 3 0.75
density 2 4 0.75
density 1 4 0.25
density 2 3 0.25
density 1 5 3.0
reservoir src 5 5 1.0 1.0
reservoir drn 5 5 1.0 0.0
init fock 10010
"""


def test_fig3_golden_serialization():
    assert serialize_model(preset("fig3")) == GOLDEN_FIG3


def test_presets_share_physics():
    assert preset("fig3") == preset("fig4_moleculepop") == preset("fig5_sweep")
    assert preset("fig5_sweep", u_probe=0.0) != preset("fig3")


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("sites 1\nreservoir a 1 1 1.0 1.5\n", "fermi must lie in [0, 1]"),
        ("sites 1\nreservoir a 1 1 -1.0 0.5\n", "gamma must be >= 0"),
        ("sites 2\nhop 1 3 1.0\n", "out of range 1..2"),
        ("sites 2\nwiggle 1\n", "unknown directive"),
        ("sites 2\nonsite 1\n", "expects 2 argument"),
        ("sites 2\nonsite 1 abc\n", "cannot parse"),
        ("sites 2\nhop 1 1 0.5\n", "two distinct sites"),
        ("sites 2\ninit fock 101\n", "must be 2 bits"),
        ("sites 2\nprofile ghost 0 1\n", "unknown reservoir"),
        ("sites 1\nreservoir a 1 1 1 1\nprofile a 2 1\n", "must start at t=0"),
        ("onsite 1 0\n", "missing 'sites'"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(ModelError) as exc:
        parse_model(text)
    assert fragment in str(exc.value)


def test_error_reports_line_number():
    text = "# header\nsites 1\n\nreservoir a 1 1 1.0 1.5   # too full\n"
    with pytest.raises(ModelError) as exc:
        parse_model(text)
    assert exc.value.line == 4
    assert str(exc.value).startswith("line 4:")


def test_comments_and_blank_lines_ignored():
    spec = parse_model("# c\n\nsites 2   # two\n  hop 1 2 0.5\n")
    assert spec.terms == (HamiltonianTerm("hop", (1, 2), 0.5),)


def test_profiles_parse_sorted():
    spec = parse_model("sites 1\nreservoir a 1 1 2.0 1.0\nprofile a 5 1\nprofile a 0 0\n")
    assert spec.reservoirs[0].profile == ((0.0, 0.0), (5.0, 1.0))


def test_density_initial_state(tmp_path):
    rho = np.diag([0.25, 0.75]).astype(complex)
    np.save(tmp_path / "rho.npy", rho)
    (tmp_path / "m.txt").write_text("sites 1\ninit density rho.npy\n")
    spec = load_model(tmp_path / "m.txt")
    np.testing.assert_array_equal(spec.initial_state(), rho)
    assert parse_model(serialize_model(spec, "rho.npy"), base_dir=tmp_path) == spec


def test_density_initial_state_validated(tmp_path):
    np.save(tmp_path / "bad.npy", np.diag([0.5, 0.6]))
    with pytest.raises(ModelError, match="trace"):
        parse_model("sites 1\ninit density bad.npy\n", base_dir=tmp_path)


def test_default_initial_state_is_vacuum():
    rho = parse_model("sites 2\n").initial_state()
    assert rho[fock_index("00"), fock_index("00")] == 1.0


def test_override_helpers():
    spec = preset("fig3").with_term_strength("density_density", (5, 1), 0.0)
    terms = {(t.kind, t.sites): t.strength for t in spec.terms}
    assert terms[("density_density", (1, 5))] == 0.0
    spec = spec.with_reservoir_gamma(2.5)
    assert all(r.gamma == 2.5 for r in spec.reservoirs)


# --- round trip -------------------------------------------------------------

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def model_specs(draw):
    n = draw(st.integers(1, 5))
    site = st.integers(1, n)
    terms = []
    for _ in range(draw(st.integers(0, 6))):
        kind = draw(st.sampled_from(["onsite", "hop", "density_density"] if n > 1 else ["onsite"]))
        if kind == "onsite":
            sites = (draw(site),)
        else:
            a = draw(site)
            b = draw(site.filter(lambda x: x != a))
            sites = (a, b)
        terms.append(HamiltonianTerm(kind, sites, draw(finite)))
    res = []
    for k in range(draw(st.integers(0, 3))):
        starts = sorted(set(draw(st.lists(st.floats(0.1, 50), max_size=3))))
        prof = () if not draw(st.booleans()) else tuple(zip([0.0, *starts], draw(st.lists(st.floats(0, 3), min_size=len(starts) + 1, max_size=len(starts) + 1))))
        res.append(ReservoirAttachment(f"r{k}", (draw(site), draw(site)), draw(st.floats(0, 5)), draw(st.floats(0, 1)), prof))
    init = draw(st.one_of(st.none(), st.text("01", min_size=n, max_size=n)))
    return ModelSpec(n, tuple(terms), tuple(res), init)


@settings(max_examples=60, deadline=None)
@given(model_specs())
def test_parse_serialize_round_trip(spec):
    text = serialize_model(spec)
    again = parse_model(text)
    assert again == spec
    assert serialize_model(again) == text


# --- Hamiltonian ------------------------------------------------------------

def test_single_site_onsite():
    H = build_hamiltonian(parse_model("sites 1\nonsite 1 2.0\n"))
    np.testing.assert_array_equal(H, np.diag([2.0, 0.0]))


def test_two_site_hop_single_particle_block():
    delta = 0.37
    H = build_hamiltonian(parse_model(f"sites 2\nhop 1 2 {-delta}\n"))
    idx = [fock_index("10"), fock_index("01")]
    block = H[np.ix_(idx, idx)]
    # 2x2 block [[0, t], [t, 0]] has eigenvalues +/- |t|
    np.testing.assert_allclose(np.linalg.eigvalsh(block), [-delta, delta], atol=1e-14)


def test_molecule_block_spectrum_is_commensurate():
    # one electron per molecule; couplings written out by hand in the basis
    # |1010>, |0101>, |1001>, |0110>; the exact spectrum is {0, 1/4, 3/4, 1}
    spec = preset("fig3", u_probe=0.0)
    H = build_hamiltonian(spec)
    labels = ["10100", "01010", "10010", "01100"]
    idx = [fock_index(b) for b in labels]
    block = H[np.ix_(idx, idx)]
    d = DELTA
    by_hand = np.array(
        [[0.75, 0, -d, -d], [0, 0.75, -d, -d], [-d, -d, 0.25, 0], [-d, -d, 0, 0.25]]
    )
    np.testing.assert_allclose(np.linalg.eigvalsh(block), np.linalg.eigvalsh(by_hand), atol=1e-12)
    np.testing.assert_allclose(np.linalg.eigvalsh(block), [0.0, 0.25, 0.75, 1.0], atol=1e-12)
    # the block is closed under H: no amplitude leaves the subspace
    others = [k for k in range(32) if k not in idx]
    assert np.abs(H[np.ix_(others, idx)]).max() == 0.0


@pytest.mark.parametrize("name", ["fig3"])
def test_hamiltonian_conserves_particle_number(name):
    H = build_hamiltonian(preset(name))
    assert np.abs(commutator(H, total_number(5))).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(model_specs())
def test_hamiltonian_hermitian_and_number_conserving(spec):
    H = build_hamiltonian(spec)
    assert np.abs(H - H.conj().T).max() < 1e-12
    assert np.abs(commutator(H, total_number(spec.n_sites))).max() < 1e-12


# --- rates ------------------------------------------------------------------

def test_fermi_factor_examples():
    assert fermi_factor(1.0, 0.0) == 0.5
    assert abs(fermi_factor(1e6, -1.0) - 1.0) < 1e-12
    # 1 / (1 + e^{ln 3}) = 1/4
    assert abs(fermi_factor(1.0, math.log(3.0)) - 0.25) < 1e-15
    with pytest.raises(ValueError):
        fermi_factor(-1.0, 0.0)


@given(beta=st.floats(0, 50), eps=st.floats(-50, 50))
def test_fermi_factor_symmetry_and_range(beta, eps):
    f = fermi_factor(beta, eps)
    assert 0.0 <= f <= 1.0
    assert abs(f + fermi_factor(beta, -eps) - 1.0) < 1e-12


@given(beta=st.floats(0.01, 20), a=st.floats(-20, 20), b=st.floats(-20, 20))
def test_fermi_factor_monotone(beta, a, b):
    lo, hi = min(a, b), max(a, b)
    assert fermi_factor(beta, lo) >= fermi_factor(beta, hi)


def test_rate_at_profiles():
    const = ReservoirAttachment("a", (1, 1), 1.0, 1.0)
    assert rate_at(const, 0.0) == rate_at(const, 123.4) == 1.0
    switched = ReservoirAttachment("b", (1, 1), 2.0, 1.0, ((0.0, 0.0), (5.0, 1.0)))
    assert rate_at(switched, 3.0) == 0.0
    assert rate_at(switched, 7.0) == 2.0
    with pytest.raises(ValueError):
        rate_at(switched, -1.0)


def test_rate_from_microscopic():
    assert rate_from_microscopic(0.5, 0.5, 1 / math.pi) == pytest.approx(0.5)
