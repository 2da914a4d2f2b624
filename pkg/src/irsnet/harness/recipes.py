"""Named experiment presets (fig2..fig9): the standard validation and
sweep tables of the model, as data-producing recipes.

Each recipe returns a list of (tag, SweepSpec); the harness writes one CSV
per tag. Presets pin every parameter they depend on; where a preset leaves
a knob open, the baseline value is used and the choice is recorded in the
spec comment embedded in the CSV header.
"""

from __future__ import annotations

from ..scenario import ConstantLength, Scenario, default_scenario
from .sweep import SweepSpec

__all__ = ["RECIPES", "build_recipe", "recipe_names"]

D_GRID = tuple(float(d) for d in range(25, 301, 25))
LB_GRID = (1.0, 2.0, 2.8, 4.0, 6.7, 10.0, 15.0, 22.0, 33.0, 47.0, 68.0, 100.0)
MU_GRID = (0.02, 0.08, 0.14, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


def _fig2(base: Scenario, n_drops: int, seed: int):
    specs = []
    for l in (5.0, 15.0):
        for d_serve in (25.0, 50.0):
            sc = base.replace(length=ConstantLength(l), d_serve=d_serve)
            specs.append(
                (
                    f"l{l:g}_D{d_serve:g}",
                    SweepSpec(
                        sc, "d", D_GRID, protocol="densities", engines="both",
                        n_drops=n_drops, seed=seed, abs_gate=0.08,
                        comment=(
                            f"density validation, blockage length {l} m, "
                            f"serving distance {d_serve} m; gate max(ci, "
                            f"0.08*lambda_b) applies on the per-km2 scale"
                        ),
                    ),
                )
            )
    return specs


def _fig3(base: Scenario, n_drops: int, seed: int):
    specs = []
    for lo in (100.0, 500.0):
        sc = base.replace(lambda_o=lo * 1e-6)
        specs.append(
            (
                f"lo{lo:g}",
                SweepSpec(
                    sc, "mu", MU_GRID, protocol="association", engines="both",
                    n_drops=n_drops, seed=seed,
                    comment=f"association probabilities vs mu, lambda_o={lo}/km2",
                ),
            )
        )
    return specs


def _fig4(base: Scenario, n_drops: int, seed: int):
    no_irs = base.replace(mu=0.0)
    specs = [
        (
            "a_no_irs",
            SweepSpec(
                no_irs, "lambda_b_per_km2", LB_GRID, protocol="transition",
                engines="both", n_drops=n_drops, seed=seed,
                comment="serving-link transitions vs BS density, no IRS",
            ),
        )
    ]
    # panels b/c: IRS density swept through mu at fixed lambda_o
    for d_serve in (50.0, 100.0):
        sc = base.replace(d_serve=d_serve)
        specs.append(
            (
                f"bc_D{d_serve:g}",
                SweepSpec(
                    sc, "mu",
                    (0.02, 0.05, 0.093, 0.14, 0.186, 0.3, 0.5, 0.8, 1.0),
                    protocol="transition", engines="analytic",
                    n_drops=n_drops, seed=seed,
                    comment=(
                        "transitions vs IRS fraction (lambda_i = mu*lambda_o); "
                        f"serving distance {d_serve} m; mu=0.186 gives "
                        "lambda_i=93/km2 at the baseline lambda_o=500/km2"
                    ),
                ),
            )
        )
    return specs


def _fig5(base: Scenario, n_drops: int, seed: int):
    specs = []
    d_values = tuple(float(d) for d in range(10, 101, 10))
    for mu in (0.2, 0.8):
        for lo in (100.0, 500.0):
            sc = base.replace(mu=mu, lambda_o=lo * 1e-6)
            specs.append(
                (
                    f"mu{mu:g}_lo{lo:g}",
                    SweepSpec(
                        sc, "d_serve_m", d_values, protocol="transition",
                        engines="analytic", n_drops=n_drops, seed=seed,
                        comment=(
                            f"transitions vs serving distance, mu={mu}, "
                            f"lambda_o={lo}/km2 (blockage densities beyond the "
                            "baseline pair follow the association preset)"
                        ),
                    ),
                )
            )
    return specs


def _fig6(base: Scenario, n_drops: int, seed: int):
    specs = []
    for tag, n, mu, d_serve in (
        ("a_N50_mu0.2_D20", 50, 0.2, 20.0),
        ("b_N200_mu0.8_D100", 200, 0.8, 100.0),
    ):
        sc = base.replace(n_elements=n, mu=mu, d_serve=d_serve)
        specs.append(
            (
                tag,
                SweepSpec(
                    sc, "lambda_b_per_km2", LB_GRID, protocol="handover",
                    engines="analytic", n_drops=n_drops, seed=seed,
                    comment=f"handover probability vs BS density, N={n}, "
                            f"mu={mu}, D={d_serve} m",
                ),
            )
        )
        specs.append(
            (
                tag + "_no_irs",
                SweepSpec(
                    sc.replace(mu=0.0), "lambda_b_per_km2", LB_GRID,
                    protocol="handover", engines="analytic",
                    n_drops=n_drops, seed=seed,
                    comment="no-IRS baseline of the same sweep",
                ),
            )
        )
    return specs


def _fig7(base: Scenario, n_drops: int, seed: int):
    specs = []
    d_values = tuple(float(d) for d in range(10, 101, 10))
    for mu in (0.2, 0.8):
        for n, l in ((100, 10.0), (100, 40.0), (500, 10.0)):
            sc = base.replace(mu=mu, n_elements=n, length=ConstantLength(l))
            specs.append(
                (
                    f"mu{mu:g}_N{n}_l{l:g}",
                    SweepSpec(
                        sc, "d_serve_m", d_values, protocol="handover",
                        engines="analytic", n_drops=n_drops, seed=seed,
                        comment=f"handover vs serving distance, mu={mu}, "
                                f"N={n}, l={l} m",
                    ),
                )
            )
    return specs


def _fig8(base: Scenario, n_drops: int, seed: int):
    specs = []
    n_values = (10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0)
    for l in (10.0, 40.0):
        for mu, d_serve in ((0.2, 50.0), (0.2, 100.0), (0.8, 50.0)):
            sc = base.replace(mu=mu, d_serve=d_serve, length=ConstantLength(l))
            specs.append(
                (
                    f"l{l:g}_mu{mu:g}_D{d_serve:g}",
                    SweepSpec(
                        sc, "n_elements", n_values, protocol="handover",
                        engines="analytic", n_drops=n_drops, seed=seed,
                        comment=f"handover vs element count, l={l} m, "
                                f"mu={mu}, D={d_serve} m",
                    ),
                )
            )
    return specs


def _fig9(base: Scenario, n_drops: int, seed: int):
    specs = []
    for lo in (200.0, 500.0, 800.0):
        for l in (10.0, 20.0):
            for n_c in (1e3, 3e3, 5e3):
                for d_serve in (50.0, 100.0):
                    sc = base.replace(
                        lambda_o=lo * 1e-6, length=ConstantLength(l),
                        d_serve=d_serve,
                    )
                    specs.append(
                        (
                            f"lo{lo:g}_l{l:g}_Nc{n_c:g}_D{d_serve:g}",
                            SweepSpec(
                                sc, "mu", MU_GRID, protocol="handover",
                                engines="analytic", n_drops=n_drops,
                                seed=seed, n_c=n_c,
                                comment=(
                                    "distributed deployment: mu sweep at a "
                                    f"fixed per-cell element budget N_c={n_c:g} "
                                    f"(N = N_c*lambda_b/lambda_i), lambda_o="
                                    f"{lo}/km2, l={l} m, D={d_serve} m"
                                ),
                            ),
                        )
                    )
    return specs


RECIPES = {
    "fig2": (_fig2, "BS density validation vs link distance (both engines)"),
    "fig3": (_fig3, "association probabilities vs IRS fraction (both engines)"),
    "fig4": (_fig4, "serving-link transitions vs BS density / IRS config"),
    "fig5": (_fig5, "LoS-to-NLoS transition vs serving distance"),
    "fig6": (_fig6, "handover probability vs BS density"),
    "fig7": (_fig7, "handover probability vs serving distance"),
    "fig8": (_fig8, "handover probability vs element count"),
    "fig9": (_fig9, "handover probability vs deployment fraction at fixed budget"),
}


def recipe_names() -> list[str]:
    return sorted(RECIPES)


def build_recipe(name: str, base: Scenario | None = None,
                 n_drops: int = 100_000, seed: int = 0):
    if name not in RECIPES:
        raise KeyError(f"unknown recipe {name!r}; have {recipe_names()}")
    builder, _ = RECIPES[name]
    return builder(base or default_scenario(), n_drops, seed)
