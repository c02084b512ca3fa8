#!/usr/bin/env python3
"""Smoke test for the zakai_collocation extension module.

Builds nothing itself: it locates the cdylib produced by
`cargo build -p zakai-collocation-py` (release preferred), stages it under
the import name `zakai_collocation`, and exercises each exposed type and
operation once with loose sanity bounds. Exit code 0 means every check
passed.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def stage_module() -> None:
    """Copy the built extension next to a temp dir as zakai_collocation.so."""
    candidates = [
        REPO_ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libzakai_collocation_py.so", "libzakai_collocation_py.dylib")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit(
            "error: extension not found; run `cargo build -p zakai-collocation-py` first"
        )
    stage = Path(tempfile.mkdtemp(prefix="zakai_collocation_py_"))
    shutil.copy2(built, stage / "zakai_collocation.so")
    sys.path.insert(0, str(stage))


stage_module()

import zakai_collocation as zc  # noqa: E402

CHECKS = []


def check(name, ok, detail=""):
    CHECKS.append((name, bool(ok)))
    status = "PASS" if ok else "FAIL"
    print(f"{status}: {name}" + (f" ({detail})" if detail else ""))


# --- kernel generation -------------------------------------------------------

kernel = zc.Kernel(1, 4, scale=0.8)
check("kernel reports its parameters", kernel.dim == 1 and kernel.smoothness == 4
      and kernel.scale == 0.8, repr(kernel))
check("profile is normalized at the origin", kernel.profile(0.0) == 1.0)
check("profile vanishes at the support edge", kernel.profile(1.0) == 0.0)

# The (1, 4) closed form, factored: (1-r)^9 (384r^4 + 453r^3 + 237r^2 + 63r + 7)/7.
r = 0.37
expected = (1 - r) ** 9 * (384 * r**4 + 453 * r**3 + 237 * r**2 + 63 * r + 7) / 7
check(
    "profile matches the closed form at r = 0.37",
    abs(kernel.profile(r) - expected) < 1e-14,
    f"{kernel.profile(r):.17g} vs {expected:.17g}",
)

h = 1e-6
fd = (kernel.profile(r + h) - kernel.profile(r - h)) / (2 * h)
check(
    "profile_d1 matches a central difference",
    abs(kernel.profile_d1(r) - fd) < 1e-6,
    f"{kernel.profile_d1(r):.10g} vs {fd:.10g}",
)

coeffs = kernel.coefficients()
check(
    "coefficients start at (0, '1/1', 1.0)",
    coeffs[0][0] == 0 and coeffs[0][1] == "1/1" and coeffs[0][2] == 1.0,
    str(coeffs[0]),
)

x, y = [0.30], [0.18]
check(
    "eval agrees with the scaled profile",
    abs(kernel.eval(x, y) - kernel.profile(abs(x[0] - y[0]) / kernel.scale)) < 1e-15,
)
check(
    "derivative() routes to eval_d1/eval_d2",
    kernel.derivative([1], x, y) == kernel.eval_d1(0, x, y)
    and kernel.derivative([2], x, y) == kernel.eval_d2(0, 0, x, y),
)

# --- collocation system and interpolation ------------------------------------

schedule_radius = zc.domain_schedule(32, 4)
check("domain schedule at N = 32", abs(schedule_radius - 3.5919) < 1e-3,
      f"{schedule_radius:.4f}")

system = zc.CollocationSystem(kernel, 32)
check("system picks the scheduled radius by default",
      abs(system.radius - schedule_radius) < 1e-12, repr(system))
check("system size and len agree", system.size == 32 and len(system) == 32)
check("separation is half the grid spacing",
      abs(system.separation - schedule_radius / 33) < 1e-12)

model = zc.TestModel()
check("model dimensions", model.state_dim == 1 and model.noise_dim == 1)
check(
    "initial datum is the reference at t = 0",
    abs(model.initial([0.4]) - model.reference(0.0, [0.4], [0.0])) < 1e-15,
)

points = system.points()
data = [model.initial(p) for p in points]
interp = system.interpolate(data)
worst = max(abs(interp.value(p) - v) for p, v in zip(points, data))
check("interpolant reproduces its grid data", worst < 1e-10, f"max error {worst:.2e}")
check("interpolant keeps its inputs", interp.values == data
      and len(interp.coeffs) == 32)

fd1 = (interp.value([0.5 + 1e-6]) - interp.value([0.5 - 1e-6])) / 2e-6
check(
    "interpolant derivative matches a central difference",
    abs(interp.derivative([1], [0.5]) - fd1) < 1e-5,
    f"{interp.derivative([1], [0.5]):.8g} vs {fd1:.8g}",
)

row = system.cardinal_derivative_row([0], points[7])
check(
    "cardinal row is a unit vector on the grid",
    abs(row[7] - 1.0) < 1e-10 and max(abs(v) for i, v in enumerate(row) if i != 7) < 1e-10,
)

eigen_min, condition = system.conditioning()
check("interpolation matrix is positive definite", eigen_min > 0 and condition > 1,
      f"λ_min {eigen_min:.3e}, κ {condition:.3e}")

iota = system.iota()
check("inverse-decay diagnostic stays below its bound",
      iota < 5.0 / system.separation,
      f"iota {iota}, bound {5.0 / system.separation:.1f}")

# --- generator and noise operators -------------------------------------------

at = [0.3]
l0 = zc.apply_generator(model, interp, at)
l1 = zc.apply_noise_operator(model, 1, interp, at)
# The benchmark model has unit diffusion, drift b(x) = -tanh(x) entering in
# divergence form, and a constant unit observation, so
# L0 f = f''/2 - tanh(x) f' - sech^2(x) f and L1 f = f.
expected_l0 = (
    0.5 * interp.derivative([2], at)
    - math.tanh(at[0]) * interp.derivative([1], at)
    - interp.value(at) / math.cosh(at[0]) ** 2
)
check("generator expands the divergence-form drift",
      abs(l0 - expected_l0) < 1e-12, f"{l0:.8g} vs {expected_l0:.8g}")
check("unit observation makes the noise operator the identity",
      abs(l1 - interp.value(at)) < 1e-12, f"{l1:.8g} vs {interp.value(at):.8g}")

# --- pathwise solver ----------------------------------------------------------

run = zc.simulate(model, system, steps=64, horizon=1.0, seed=11,
                  eval_points=[[-0.5], [0.0], [0.5]])
check("simulation shape", len(run["times"]) == 65
      and len(run["grid_values"]) == 65 and len(run["grid_values"][0]) == 32
      and len(run["eval_values"][0]) == 3 and not run["overflow"])

t_end = run["times"][-1]
w_end = run["wiener"][-1][0]
gaps = [
    abs(run["eval_values"][-1][j] - model.reference(t_end, p, [w_end]))
    for j, p in enumerate([[-0.5], [0.0], [0.5]])
]
check("terminal values track the closed form on one path",
      max(gaps) < 0.25, f"max gap {max(gaps):.3f}")

again = zc.simulate(model, system, steps=64, horizon=1.0, seed=11)
check("same seed reproduces the run bitwise",
      run["grid_values"] == again["grid_values"])

# --- experiments ---------------------------------------------------------------

cell = zc.rmse_cell(grid_size=8, steps=32, samples=4, seed=7,
                    eval_interval=(-1.0, 1.0), eval_count=9)
check(
    "rmse cell returns paired finite statistics",
    "failed" not in cell
    and all(math.isfinite(cell[k]) and cell[k] > 0
            for k in ("rmse", "rmse_fd", "rmse_std_error", "rmse_fd_std_error"))
    and cell["samples"] == 4,
    f"rmse {cell.get('rmse', float('nan')):.4f}, fd {cell.get('rmse_fd', float('nan')):.4f}",
)

rows = zc.iota_sweep(12)
check("iota sweep covers 2..=12 within bounds",
      [r["grid_size"] for r in rows] == list(range(2, 13))
      and all(r["within_bound"] for r in rows))

check("module exposes its version", isinstance(zc.__version__, str)
      and zc.__version__.count(".") == 2, zc.__version__)

# --- error paths ----------------------------------------------------------------

try:
    zc.Kernel(1, 4, scale=0.0)
    check("nonpositive kernel scale raises ValueError", False)
except ValueError as e:
    check("nonpositive kernel scale raises ValueError", True, str(e))

try:
    system.interpolate([1.0] * 5)
    check("wrong data length raises ValueError", False)
except ValueError as e:
    check("wrong data length raises ValueError", True, str(e))

failed = [name for name, ok in CHECKS if not ok]
print()
if failed:
    print(f"{len(failed)}/{len(CHECKS)} checks failed: {', '.join(failed)}")
    sys.exit(1)
print(f"all {len(CHECKS)} checks passed")
