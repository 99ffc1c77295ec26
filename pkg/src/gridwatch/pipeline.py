"""End-to-end orchestration: mesh build, coverage, solve, economics, sweeps.

All artifact writers are deterministic: repeated runs of the same scenario
produce byte-identical files (sorted JSON keys, repr-formatted floats, no
timestamps).
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .catalog import SensorCatalog, scale_detection
from .coverage import CoverageTable, block_detection, build_coverage
from .econ import ScenarioEconomics, load_pricing, load_traffic, scenario_npv
from .errors import ValidationError
from .geo import PlanePoint, unproject
from .mesh import AreaMesh, build_mesh, mesh_to_geojson
from .scenario import Scenario, with_overrides
from .solver import PlacementInstance, PlacementPlan, dominance_filter, solve_exact, solve_greedy

SWEEP_PARAMETERS = ("fee", "n0", "detection_scale", "r")


def thread_count() -> int:
    """Worker cap from SAND_THREADS (0 = auto, unset/invalid = serial)."""
    raw = os.environ.get("SAND_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


@dataclass(frozen=True)
class PlanResult:
    scenario: Scenario
    catalog: SensorCatalog
    admitted: tuple
    mesh: AreaMesh
    coverage: CoverageTable
    instance: PlacementInstance
    plan: PlacementPlan


def run_plan(scenario: Scenario) -> PlanResult:
    """Build mesh and coverage for a scenario and solve the placement problem."""
    catalog = scenario.load_sensor_catalog()
    if scenario.detection_scale != 1.0:
        catalog = scale_detection(catalog, scenario.detection_scale)
    admitted = scenario.resolve_sensor_filter(catalog)
    working = catalog.filtered(admitted)
    mesh = build_mesh(
        corners=scenario.corners,
        block_side=scenario.block_side_km,
        terrain_grid=scenario.terrain_path,
        min_sensor_range=working.min_range_km,
    )
    coverage = build_coverage(mesh, working, scenario.required_detection, scenario.rounding)
    instance = PlacementInstance.from_coverage(coverage, admitted)
    if scenario.apply_dominance_filter:
        instance = dominance_filter(instance, working)
    if scenario.solver_mode == "greedy":
        plan = solve_greedy(instance)
    else:
        plan = solve_exact(instance, node_budget=scenario.node_budget)
    return PlanResult(
        scenario=scenario,
        catalog=catalog,
        admitted=admitted,
        mesh=mesh,
        coverage=coverage,
        instance=instance,
        plan=plan,
    )


# -- artifact writers ---------------------------------------------------------


def plan_to_geojson(plan: PlacementPlan, mesh: AreaMesh) -> dict:
    """Chosen sites as a GeoJSON FeatureCollection of points."""
    features = []
    for c in plan.chosen:
        center = mesh.block_center(c.site)
        geo = unproject(PlanePoint(center.x, center.y), mesh.origin)
        features.append(
            {
                "type": "Feature",
                "id": c.cid,
                "geometry": {"type": "Point", "coordinates": [geo.lon, geo.lat]},
                "properties": {
                    "sensor": c.sensor,
                    "count": c.units,
                    "install_cost_usd": c.cost,
                    "site_block": c.site,
                },
            }
        )
    return {
        "type": "FeatureCollection",
        "features": features,
        "properties": {
            "total_cost_usd": plan.total_cost,
            "total_sensor_units": plan.total_units,
            "proven_optimal": plan.proven_optimal,
            "solver_mode": plan.mode,
        },
    }


def write_json(path: Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def write_heatmap_csv(path: Path, mesh: AreaMesh, catalog: SensorCatalog, sensor: str) -> None:
    """Per-block detection probability for one sensor type (0 outside the area)."""
    omega = block_detection(mesh, catalog)[sensor]
    with open(path, "w", encoding="utf-8") as fp:
        fp.write("block_index,row,col,terrain,detection_probability\n")
        for z in range(mesh.n_blocks):
            j, k = divmod(z, mesh.blocks_x)
            fp.write(f"{z},{j},{k},{mesh.block_terrain(z).label},{float(omega[z])!r}\n")


def write_summary_csv(path: Path, result: PlanResult) -> None:
    plan = result.plan
    sensor_filter = "+".join(result.admitted)
    with open(path, "w", encoding="utf-8") as fp:
        fp.write("city,sensor_filter,n_sites,n_sensor_units,total_cost_usd,proven_optimal\n")
        fp.write(
            f"{result.scenario.name},{sensor_filter},{plan.n_sites},{plan.total_units},"
            f"{plan.total_cost!r},{str(plan.proven_optimal).lower()}\n"
        )


def write_plan_artifacts(result: PlanResult, outdir) -> dict:
    """Write mesh/plan GeoJSON and heatmap/summary/coverage CSVs; returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "mesh": outdir / "mesh.geojson",
        "plan": outdir / "plan.geojson",
        "heatmap": outdir / "heatmap.csv",
        "summary": outdir / "summary.csv",
        "coverage": outdir / "coverage.csv",
    }
    write_json(paths["mesh"], mesh_to_geojson(result.mesh))
    write_json(paths["plan"], plan_to_geojson(result.plan, result.mesh))
    heatmap_sensor = result.scenario.heatmap_sensor or result.admitted[0]
    if heatmap_sensor not in result.admitted:
        raise ValidationError(f"heatmap sensor {heatmap_sensor!r} is not among admitted sensors {result.admitted}")
    write_heatmap_csv(paths["heatmap"], result.mesh, result.catalog, heatmap_sensor)
    write_summary_csv(paths["summary"], result)
    with open(paths["coverage"], "w", encoding="utf-8") as fp:
        result.coverage.write_csv(fp)
    return paths


# -- economics ----------------------------------------------------------------


def run_econ(scenario: Scenario, plan_cost: float) -> ScenarioEconomics:
    """Cash-flow series for a given capital cost under the scenario's econ config."""
    e = scenario.econ
    return scenario_npv(
        plan_cost=plan_cost,
        traffic=load_traffic(e.traffic_path),
        policy=load_pricing(e.pricing_path),
        n0=e.initial_subscribers,
        fee_usd_month=e.monthly_fee_usd,
        growth_low=e.growth_low,
        growth_high=e.growth_high,
        discount_rate=e.discount_rate,
        horizon_years=e.horizon_years,
        start_year=e.start_year,
        subscriber_rounding=e.subscriber_rounding,
        growth_lag=e.growth_lag_years,
    )


def write_cashflow_csv(path, econ: ScenarioEconomics) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        fp.write(
            "year,revenue_low,revenue_high,cloud_cost_low,cloud_cost_high,"
            "sensor_capex,npv_low,npv_high,cum_npv_low,cum_npv_high\n"
        )
        for i, year in enumerate(econ.years):
            capex = econ.capex if year == econ.start_year else 0.0
            fp.write(
                f"{year},{econ.revenue_low[i]!r},{econ.revenue_high[i]!r},"
                f"{econ.cloud_low[i]['total']!r},{econ.cloud_high[i]['total']!r},{capex!r},"
                f"{econ.low.npv[i]!r},{econ.high.npv[i]!r},"
                f"{econ.low.cumulative_npv[i]!r},{econ.high.cumulative_npv[i]!r}\n"
            )


# -- sensitivity sweeps ---------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    n_sites: int
    n_sensor_units: int
    total_cost_usd: float
    final_cum_npv_low: float
    final_cum_npv_high: float
    break_even_year_low: Optional[int]
    break_even_year_high: Optional[int]


def _sweep_one(scenario: Scenario, parameter: str, value: float, base: Optional[PlanResult]) -> SweepRow:
    if parameter == "fee":
        varied = with_overrides(scenario, monthly_fee_usd=float(value))
        result = base
    elif parameter == "n0":
        varied = with_overrides(scenario, initial_subscribers=float(value))
        result = base
    elif parameter == "detection_scale":
        varied = with_overrides(scenario, detection_scale=float(value))
        result = run_plan(varied)
    else:  # "r"
        varied = with_overrides(scenario, required_detection=float(value))
        result = run_plan(varied)
    econ = run_econ(varied, result.plan.total_cost)
    return SweepRow(
        parameter=parameter,
        value=float(value),
        n_sites=result.plan.n_sites,
        n_sensor_units=result.plan.total_units,
        total_cost_usd=result.plan.total_cost,
        final_cum_npv_low=econ.low.cumulative_npv[-1],
        final_cum_npv_high=econ.high.cumulative_npv[-1],
        break_even_year_low=econ.low.break_even_year,
        break_even_year_high=econ.high.break_even_year,
    )


def sweep(scenario: Scenario, parameter: str, values: Sequence[float]) -> list:
    """Re-run the pipeline for each parameter value; placement is re-solved only
    when the parameter affects coverage (detection_scale, r).  Row order follows
    the input value order."""
    if parameter not in SWEEP_PARAMETERS:
        raise ValidationError(f"unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}")
    values = list(values)
    if not values:
        raise ValidationError("sweep needs at least one value")
    base = run_plan(scenario) if parameter in ("fee", "n0") else None
    workers = min(thread_count(), len(values))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda v: _sweep_one(scenario, parameter, v, base), values))
    else:
        rows = [_sweep_one(scenario, parameter, v, base) for v in values]
    return rows


def write_sweep_csv(path, rows: Sequence[SweepRow]) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        fp.write(
            "parameter,value,n_sites,n_sensor_units,total_cost_usd,"
            "final_cum_npv_low,final_cum_npv_high,break_even_year_low,break_even_year_high\n"
        )
        for r in rows:
            be_low = "none" if r.break_even_year_low is None else r.break_even_year_low
            be_high = "none" if r.break_even_year_high is None else r.break_even_year_high
            fp.write(
                f"{r.parameter},{r.value!r},{r.n_sites},{r.n_sensor_units},{r.total_cost_usd!r},"
                f"{r.final_cum_npv_low!r},{r.final_cum_npv_high!r},{be_low},{be_high}\n"
            )
