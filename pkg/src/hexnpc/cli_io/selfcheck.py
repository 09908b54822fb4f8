"""Fast built-in consistency checks (``hexnpc selfcheck``)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import coupled_modes as cm
from .. import fock_states as fs
from ..qpm_geometry import PumpConfig

__all__ = ["CheckResult", "run_selfcheck"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _canonicality(rng) -> CheckResult:
    worst = 0.0
    for _ in range(300):
        g0 = rng.uniform(0, 500)
        gamma = rng.choice([1.0, math.sqrt(2), cm.PHI, -1 / cm.PHI])
        D = rng.uniform(-3000, 3000)
        c = cm.bogoliubov(g0, gamma, D, rng.uniform(1e-3, 2e-2))
        worst = max(worst, abs(abs(c.U) ** 2 - abs(c.V) ** 2 - 1) / max(1.0, abs(c.U) ** 2))
    return CheckResult("bogoliubov_canonical", worst < 1e-12, f"max relative defect {worst:.2e}")


def _oracles(rng) -> list[CheckResult]:
    out = []
    for system, solve in (("three_mode", cm.solve_three_mode),
                          ("four_mode", cm.solve_four_mode_resonant)):
        worst = 0.0
        for _ in range(3):
            l_c = 10e-3
            pump = PumpConfig(0.0, rng.uniform(0, 3) / l_c, l_c)
            D = rng.uniform(-5, 5) / l_c
            a = solve(pump, D).covariance
            b = cm.integrate_ode_oracle(system, pump, D, steps=4000).covariance
            worst = max(worst, float(np.max(np.abs(a - b))))
        out.append(CheckResult(f"{system}_oracle", worst < 1e-8, f"max |delta sigma| {worst:.2e}"))
    return out


def _ratios() -> CheckResult:
    r = []
    for g0l in (1e-3, 5.0):
        n = cm.solve_four_mode_resonant(PumpConfig(0.0, g0l / 0.01, 0.01), 0.0).mean_photon_numbers()
        r.append(n["b_s"] / n["c_s"])
    ok = abs(r[0] - 2) < 1e-4 and abs(r[1] - cm.PHI**2) < 1e-3
    return CheckResult("four_mode_ratios", ok, f"b/c = {r[0]:.7f} (weak), {r[1]:.6f} (g0l = 5)")


def _conditional() -> CheckResult:
    ok = all(fs.split_distribution_exact(N) == fs.binomial_exact(N) for N in range(21))
    return CheckResult("conditional_binomial", ok, "N = 0..20 in rational arithmetic")


def _fock_gaussian() -> CheckResult:
    # cutoff chosen so the neglected tail (tanh r)^(2 N_max) is below 1e-12
    r = 1.5
    N_max = math.ceil(math.log(1e-12) / (2 * math.log(math.tanh(r))))
    coeff = cm.bogoliubov(r / 0.01, 1.0, 0.0, 0.01)
    st = fs.TruncatedFockState(("s", "i"), np.diag(fs.tmsv_amplitudes(coeff, N_max)))
    means, cov = st.number_moments()
    ref = cm.correlations(cm.solve_two_mode(PumpConfig(0.0, r / 0.01, 0.01), 0.0))
    err = max(abs(means[0] - ref.mean_numbers[0]), abs(cov[0, 0] - ref.number_covariance[0, 0]))
    return CheckResult("fock_vs_gaussian", err < 1e-6, f"r = 1.5, N_max = {N_max}, error {err:.2e}")


def _fibonacci() -> CheckResult:
    tr = cm.quadrature_fibonacci(1.0, 20.0, 4000)
    ints = cm.fibonacci_integers(7)
    ok = abs(tr.ratio - cm.PHI) < 1e-8 and [F for F, _ in ints] == [1, 1, 2, 3, 5, 8, 13]
    return CheckResult("fibonacci", ok, f"B/C - phi = {tr.ratio - cm.PHI:.2e}")


def run_selfcheck(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [_canonicality(rng), *_oracles(rng), _ratios(), _conditional(), _fock_gaussian(),
            _fibonacci()]
