"""End-to-end acceptance gates for the numerical laboratory.

Each test prints one [PASS]/[FAIL] line (visible with ``pytest -s``) and
asserts its stated tolerance.  Desk scale means 150 bath oscillators
unless a gate states otherwise.
"""

import hashlib
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest

from qbmlab.analytic import (
    BranchModelParams,
    d_total,
    entanglement_value,
    i_nr_value,
)
from qbmlab.config import parse_config
from qbmlab.correlations import (
    FractionSampler,
    band_correlations,
    band_partition,
    pi_pe_plots,
    pi_plot,
)
from qbmlab.gaussian import (
    ModeSubset,
    log_negativity,
    symplectic_eigenvalues,
)
from qbmlab.model import (
    BathSpec,
    SqueezedInitialState,
    discretize_bath,
    evolve,
    initial_covariance,
    make_propagator,
    total_energy,
)
from qbmlab.redundancy import entanglement_redundancy
from qbmlab.runner import compare_numeric_analytic, run_experiment


@contextmanager
def criterion(tag: str, summary: str):
    try:
        yield
    except AssertionError as exc:
        first = str(exc).splitlines()[0] if str(exc) else ""
        print(f"[FAIL] criterion {tag}: {summary} :: {first}")
        raise
    print(f"[PASS] criterion {tag}: {summary}")


def desk_sub_ohmic(n_osc=150):
    return BathSpec(exponent=0.5, cutoff=20.0, coupling=0.1, n_oscillators=n_osc, omega_s=3.0)


@pytest.fixture(scope="session")
def desk_model():
    spec = desk_sub_ohmic()
    bath = discretize_bath(spec)
    prop = make_propagator(spec, bath)
    cov0 = initial_covariance(spec, bath, SqueezedInitialState.from_r(-5.0, spec))
    return spec, bath, prop, cov0


@pytest.fixture(scope="session")
def super_ohmic_run():
    """Non-dissipative run in the strong-decoherence window (gates 4-6).

    Cubic spectral density with a high cutoff keeps the dynamics
    reversible; the coupling is chosen so that the decoherence function
    reaches the regime the universal entanglement curve requires.
    """
    spec = BathSpec(exponent=3.0, cutoff=100.0, coupling=0.8, n_oscillators=300, omega_s=3.0)
    bath = discretize_bath(spec)
    prop = make_propagator(spec, bath)
    cov0 = initial_covariance(spec, bath, SqueezedInitialState.from_r(-5.0, spec))
    t_probe = np.pi / 6.0
    cov = evolve(prop, cov0, t_probe)
    params = BranchModelParams(r=-5.0, omega_s=3.0, bath=bath)
    d = d_total(t_probe, params)
    k_dynamic = d * params.delta_x**2
    # spread in the squeeze-amplitude convention delta_x0 * exp(|r|), the
    # definitional scale used for the regime threshold below
    k_amplitude = d * (params.delta_x0 * np.exp(5.0)) ** 2
    sampler = FractionSampler(
        seed=7,
        samples_per_point=20,
        f_grid=np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]),
    )
    mi_curve, pe_curve = pi_pe_plots(cov, sampler, t=t_probe)
    return {
        "spec": spec,
        "t": t_probe,
        "mi": mi_curve,
        "pe": pe_curve,
        "k_dynamic": k_dynamic,
        "k_amplitude": k_amplitude,
    }


@pytest.fixture(scope="session")
def desk_pipeline(tmp_path_factory):
    """Full desk-scale pipeline, serial and with 8 workers (gates 9-10)."""
    base = tmp_path_factory.mktemp("pipeline")
    timings = {}
    outdirs = {}
    for label, workers in (("serial", 1), ("workers8", 8)):
        outdir = str(base / label)
        cfg = parse_config(
            overrides=dict(profile="desk", outdir=outdir, run_id="desk", workers=workers),
            env={},
        )
        t0 = time.perf_counter()
        run_experiment(cfg, ("bands", "piplot", "peplot", "redundancy"))
        timings[label] = time.perf_counter() - t0
        outdirs[label] = outdir
    return {"timings": timings, "outdirs": outdirs}


def test_criterion_1_purity_symplecticity_energy(desk_model):
    spec, bath, prop, cov0 = desk_model
    with criterion("1", "global purity within 1e-6 and energy drift within 1e-8"):
        e0 = total_energy(spec, bath, cov0)
        worst_nu = 0.0
        worst_drift = 0.0
        for t in np.linspace(0.0, 10.0, 40):
            cov = evolve(prop, cov0, t)
            nus = symplectic_eigenvalues(cov).values
            worst_nu = max(worst_nu, float(np.max(np.abs(nus - 0.5))))
            worst_drift = max(worst_drift, abs(total_energy(spec, bath, cov) - e0) / abs(e0))
        assert worst_nu <= 1e-6, f"max |nu - 1/2| = {worst_nu:.3e}"
        assert worst_drift <= 1e-8, f"energy drift = {worst_drift:.3e}"


def test_criterion_2_propagator_vs_integrator_oracle():
    spec = BathSpec(exponent=0.5, cutoff=20.0, coupling=0.1, n_oscillators=2, omega_s=3.0)
    bath = discretize_bath(spec)
    cov0 = initial_covariance(spec, bath, SqueezedInitialState.from_r(-5.0, spec))
    with criterion("2", "normal-mode covariance matches RK4(h=1e-4) at t=5 to 1e-8"):
        exact = evolve(make_propagator(spec, bath), cov0, 5.0)
        n = 3
        masses = np.concatenate(([spec.system_mass], bath.masses))
        a = np.zeros((2 * n, 2 * n))
        for i in range(n):
            a[2 * i, 2 * i + 1] = 1.0 / masses[i]
        a[1, 0] = -spec.system_mass * spec.omega_s**2 - bath.counterterm
        for kk in range(bath.n_oscillators):
            a[2 * (kk + 1) + 1, 2 * (kk + 1)] = -bath.masses[kk] * bath.frequencies[kk] ** 2
            a[1, 2 * (kk + 1)] = -bath.couplings[kk]
            a[2 * (kk + 1) + 1, 0] = -bath.couplings[kk]
        h = 1e-4
        z = np.eye(2 * n)
        for _ in range(int(round(5.0 / h))):
            k1 = a @ z
            k2 = a @ (z + 0.5 * h * k1)
            k3 = a @ (z + 0.5 * h * k2)
            k4 = a @ (z + h * k3)
            z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        brute = z @ cov0.data @ z.T
        diff = float(np.max(np.abs(exact.data - brute)))
        assert diff <= 1e-8, f"max-entry difference {diff:.3e}"


def test_criterion_3_paired_complement_symmetry(desk_model):
    spec, bath, prop, cov0 = desk_model
    with criterion("3", "per-sample |I(f) + I(1-f) - 2 H(S)| <= 1e-6 at every f"):
        cov = evolve(prop, cov0, 5.0)
        curve = pi_plot(cov, FractionSampler(seed=11, samples_per_point=20), t=5.0, keep_samples=True)
        h_s = curve.h_system
        worst = 0.0
        grid = list(curve.f_values)
        for f in grid:
            mirrors = [g for g in grid if abs(1.0 - f - g) < 1e-9]
            if f >= 1.0 or not mirrors:
                continue
            left = curve.samples[float(f)]
            if abs(mirrors[0] - f) < 1e-12:
                sums = left[0::2] + left[1::2]
            else:
                sums = left + curve.samples[float(mirrors[0])]
            worst = max(worst, float(np.max(np.abs(sums - 2.0 * h_s))))
        assert worst <= 1e-6, f"worst per-sample defect {worst:.3e}"


def test_criterion_4_universal_plateau(super_ohmic_run):
    run = super_ohmic_run
    pe = run["pe"]
    with criterion("4", "mean E(f) within 10% of the universal curve, plateau bounded"):
        assert run["k_amplitude"] >= 100.0, f"regime threshold not met: {run['k_amplitude']:.1f}"
        for f in (0.2, 0.4, 0.6, 0.8):
            universal = 0.5 * np.log((1 + 3 * f) / (1 - f))
            got = pe.value_at(f)
            dev = abs(got - universal) / universal
            assert dev <= 0.10, f"f={f}: E={got:.4f} vs universal {universal:.4f} ({dev:.1%})"
        plateau = 0.5 * np.log(5.0)
        got_half = pe.value_at(0.5)
        assert abs(got_half - plateau) / plateau <= 0.10, f"E(1/2) = {got_half:.4f}"
        assert got_half <= plateau + 0.02, f"E(1/2) = {got_half:.4f} exceeds bound"


def test_criterion_5_non_redundant_information(super_ohmic_run):
    run = super_ohmic_run
    mi = run["mi"]
    with criterion("5", "I_NR near 2: numeric within 15%, closed form within 1%"):
        i04 = mi.value_at(0.4)
        i06 = mi.value_at(0.6)
        numeric = (i06 - i04) / 0.2
        assert abs(numeric - 2.0) / 2.0 <= 0.15, f"numeric I_NR = {numeric:.3f}"
        analytic = i_nr_value(run["k_amplitude"])
        assert abs(analytic - 2.0) / 2.0 <= 0.01, f"closed-form I_NR = {analytic:.4f}"


def test_criterion_6_numeric_vs_closed_form(super_ohmic_run):
    run = super_ohmic_run
    spec = run["spec"]
    with criterion("6", "numeric curves within 10% of the closed forms on f in [0.1, 0.9]"):
        cfg = parse_config(
            overrides=dict(
                exponent=spec.exponent,
                cutoff=spec.cutoff,
                coupling=spec.coupling,
                n_oscillators=spec.n_oscillators,
                omega_s=spec.omega_s,
                squeezing=-5.0,
                t_min=run["t"],
                t_max=run["t"],
                n_times=1,
                outdir="unused",
                run_id="unused",
            ),
            env={},
        )
        _, summary = compare_numeric_analytic(cfg, curves={run["t"]: (run["mi"], run["pe"])})
        dev_mi = summary["max_rel_dev_core"]["mi"]
        dev_ne = summary["max_rel_dev_core"]["neg"]
        assert dev_mi <= 0.10, f"MI deviation {dev_mi:.1%}"
        assert dev_ne <= 0.10, f"entanglement deviation {dev_ne:.1%}"


@pytest.fixture(scope="session")
def recoherence_scans():
    def e_full_scan(r, times):
        spec = BathSpec(exponent=3.0, cutoff=600.0, coupling=0.1, n_oscillators=600, omega_s=3.0)
        bath = discretize_bath(spec)
        prop = make_propagator(spec, bath)
        cov0 = initial_covariance(spec, bath, SqueezedInitialState.from_r(r, spec))
        vals = []
        for t in times:
            cov = evolve(prop, cov0, t)
            vals.append(log_negativity(cov, ModeSubset.of([0], cov.n_modes)))
        return np.array(vals)

    period = 2.0 * np.pi / 3.0
    dip = np.pi / 3.0
    times = np.concatenate([np.linspace(period / 14, period, 13), [dip]])
    return {r: e_full_scan(r, times) for r in (-5.0, 5.0)}


def test_criterion_7_recoherence(recoherence_scans):
    with criterion("7", "momentum-delocalized branch recoheres at t = pi/Omega; position branch does not"):
        neg_branch = recoherence_scans[-5.0]
        dip, peak = neg_branch[-1], neg_branch[:-1].max()
        assert dip < 0.05 * peak, f"dip {dip:.4f} vs peak {peak:.4f} ({dip / peak:.1%})"
        pos_branch = recoherence_scans[5.0]
        dip_p, peak_p = pos_branch[-1], pos_branch[:-1].max()
        assert dip_p > 0.50 * max(peak_p, dip_p), f"position branch fell to {dip_p / peak_p:.1%}"


def test_criterion_8_band_dominance(desk_model):
    spec, bath, prop, cov0 = desk_model
    with criterion("8", "resonant band dominates entanglement at t=2; high bands dominate MI at t=0.2"):
        bands = band_partition(spec.n_oscillators, 10, bath.frequencies)
        resonant = next(
            i
            for i, block in enumerate(bands.band_members)
            if bath.frequencies[block[0] - 1] <= spec.omega_s <= bath.frequencies[block[-1] - 1]
        )
        late = band_correlations(evolve(prop, cov0, 2.0), bands, t=2.0)
        assert int(np.argmax(late.neg)) == resonant, (
            f"entanglement peaks in band centered {late.band_edges[int(np.argmax(late.neg))]:.2f}"
        )
        early = band_correlations(evolve(prop, cov0, 0.2), bands, t=0.2)
        mi_center = float(early.band_edges[int(np.argmax(early.mi))])
        assert mi_center > spec.omega_s, f"MI-maximal band center {mi_center:.2f}"


def test_criterion_9a_redundancy_estimate():
    with criterion("9a", "extracted R_E within a factor 1.25 of the area estimate"):
        dx0_sq = 1.0 / 6.0  # ground-state spread at unit mass, frequency 3
        for k in (100.0, 1000.0):
            f = np.arange(1, 2001) / 2000.0
            curve_y = np.array([entanglement_value(float(x), k) for x in f])
            from qbmlab.correlations import CorrelationCurve

            curve = CorrelationCurve(
                t=0.0,
                measure="neg",
                f_values=f,
                mean=curve_y,
                stderr=np.zeros_like(f),
                n_samples=np.ones(len(f), dtype=int),
                h_system=0.0,
            )
            _, r_e = entanglement_redundancy(curve, 0.2)
            estimate = (k / dx0_sq) ** 0.4
            factor = max(r_e / estimate, estimate / r_e)
            assert factor <= 1.25, (
                f"k={k:g}: extracted R_E = {r_e:.3f} vs area estimate {estimate:.2f} "
                f"(factor {factor:.2f})"
            )


def test_criterion_9b_redundancy_growth(desk_pipeline):
    with criterion("9b", "R_E and R_I non-decreasing on t in [3, 9]"):
        path = os.path.join(desk_pipeline["outdirs"]["serial"], "desk_redundancy.csv")
        rows = np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="utf-8")
        window = (rows["t"] >= 3.0) & (rows["t"] <= 9.0)
        r_e = rows["r_e"][window]
        r_i = rows["r_i"][window]
        assert np.all(np.isfinite(r_e)) and np.all(np.isfinite(r_i))
        assert np.all(np.diff(r_e) >= 0.0), f"R_E series not monotone: {np.round(r_e, 3)}"
        assert np.all(np.diff(r_i) >= 0.0), f"R_I series not monotone: {np.round(r_i, 3)}"


def test_criterion_10a_determinism(desk_pipeline):
    with criterion("10a", "serial and 8-worker desk pipelines emit identical bytes"):
        digests = {}
        for label, outdir in desk_pipeline["outdirs"].items():
            digests[label] = {
                name: hashlib.sha256((open(os.path.join(outdir, name), "rb")).read()).hexdigest()
                for name in sorted(os.listdir(outdir))
                if not name.endswith("_manifest.json")
            }
        assert digests["serial"] == digests["workers8"]
        assert len(digests["serial"]) > 0


def test_criterion_10b_runtime(desk_pipeline):
    with criterion("10b", "desk pipeline completes within 10 minutes single-threaded"):
        elapsed = desk_pipeline["timings"]["serial"]
        assert elapsed <= 600.0, f"took {elapsed:.1f} s"


def test_criterion_10c_parallel_speedup(desk_pipeline):
    with criterion("10c", "at least 3x speedup with 8 workers"):
        speedup = desk_pipeline["timings"]["serial"] / desk_pipeline["timings"]["workers8"]
        assert speedup >= 3.0, f"measured speedup {speedup:.2f}x"
