"""Synthetic residential load, weather, price and EV smart-charging series.

Every generator is a pure function of (parameters, seed) on a 5-minute
DatetimeIndex, so scenario assemblies are reproducible bit for bit.  The
default horizon is two 8-week segments, one in winter and one in summer;
generators key their seasonality on day-of-year, so a non-contiguous index
simply skips the gap.

EV charging is price-driven: each EV-day greedily fills the cheapest
5-minute slots inside its plug-in window, at full charger power, until the
drawn energy requirement (quantised to whole slots) is met.  Ties are broken
by earliest slot.
"""

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.signal import lfilter

from .errors import InfeasibleRequirement
from .grid import ADJACENT_IDS, LEAF_IDS, LOAD_BUS_IDS
from .params import (
    EvFleetParams,
    LoadParams,
    PriceParams,
    ScenarioParams,
    WeatherParams,
)

STEPS_PER_HOUR = 12
STEPS_PER_DAY = 24 * STEPS_PER_HOUR

#: Default desk-scale horizon: 8 winter weeks plus 8 summer weeks.
DEFAULT_SEGMENTS = (("2022-01-03", 8), ("2022-06-27", 8))


def five_minute_index(start, days):
    return pd.date_range(start=start, periods=days * STEPS_PER_DAY, freq="5min")


def horizon_index(segments=DEFAULT_SEGMENTS):
    """Concatenated 5-minute index over (start, weeks) segments."""
    parts = [five_minute_index(start, weeks * 7) for start, weeks in segments]
    idx = parts[0]
    for p in parts[1:]:
        idx = idx.append(p)
    if not idx.is_monotonic_increasing or idx.has_duplicates:
        raise ValueError("horizon segments must be ordered and disjoint")
    return idx


def _ar1(rng, n, phi, sigma):
    """Stationary AR(1) noise, correlation phi per step, marginal std sigma."""
    burn = 200
    w = rng.standard_normal(n + burn) * sigma * np.sqrt(max(1.0 - phi * phi, 1e-12))
    x = lfilter([1.0], [1.0, -phi], w)
    return x[burn:]


@dataclass(frozen=True)
class WeatherSeries:
    temperature: pd.Series       # degC
    solar_radiation: pd.Series   # W/m^2

    @property
    def index(self):
        return self.temperature.index


@dataclass(frozen=True)
class PriceSeries:
    price: pd.Series             # currency/kWh, constant within each hour

    @property
    def index(self):
        return self.price.index


@dataclass(frozen=True)
class CustomerProfile:
    p: pd.Series                 # kW, >= 0
    q: pd.Series                 # kvar, inductive
    heating_share: float


def _hour_of_day(index):
    return index.hour.to_numpy() + index.minute.to_numpy() / 60.0


def _bump(h, center, width):
    """Periodic Gaussian bump over the 24 h clock."""
    d = np.minimum(np.abs(h - center), 24.0 - np.abs(h - center))
    return np.exp(-0.5 * (d / width) ** 2)


def gen_weather(index, seed, params=None):
    """Seasonal temperature and clear-sky-with-clouds radiation series."""
    wp = params or WeatherParams()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    doy = index.dayofyear.to_numpy().astype(float)
    h = _hour_of_day(index)

    season = -np.cos(2.0 * np.pi * (doy - 15.0) / 365.0)   # -1 mid Jan, +1 mid Jul
    temp = (
        wp.t_mean_c
        + wp.t_annual_amp_c * season
        - wp.t_daily_amp_c * np.cos(2.0 * np.pi * (h - 14.0) / 24.0)
        + _ar1(rng, len(index), np.exp(-1.0 / wp.t_noise_corr_steps), wp.t_noise_sigma)
    )

    daylength = wp.daylength_mean_h + wp.daylength_amp_h * np.cos(
        2.0 * np.pi * (doy - 172.0) / 365.0
    )
    sunrise = 12.0 - daylength / 2.0
    frac = (h - sunrise) / daylength
    bell = np.where((frac > 0.0) & (frac < 1.0), np.sin(np.pi * np.clip(frac, 0.0, 1.0)), 0.0)
    amp = wp.solar_max_winter + (wp.solar_max_summer - wp.solar_max_winter) * (
        (daylength - (wp.daylength_mean_h - wp.daylength_amp_h)) / (2.0 * wp.daylength_amp_h)
    )
    day_key = index.normalize()
    uniq, day_pos = np.unique(day_key, return_inverse=True)
    clear_frac = wp.cloud_min + (1.0 - wp.cloud_min) * rng.uniform(size=len(uniq))
    intraday = np.exp(
        _ar1(rng, len(index), np.exp(-1.0 / wp.cloud_intraday_corr_steps),
             wp.cloud_intraday_sigma)
    )
    solar = bell * amp * clear_frac[day_pos] * intraday

    return WeatherSeries(
        temperature=pd.Series(temp, index=index, name="temperature"),
        solar_radiation=pd.Series(solar, index=index, name="solar_radiation"),
    )


def gen_prices(index, seed, params=None):
    """Hourly retail price blocks with a night valley and two ridges."""
    pp = params or PriceParams()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    hours = index.floor("h")
    uniq_hours, hour_pos = np.unique(hours, return_inverse=True)
    uh = pd.DatetimeIndex(uniq_hours)
    h = uh.hour.to_numpy().astype(float)
    day_key = uh.normalize()
    uniq_days, day_pos = np.unique(day_key, return_inverse=True)

    shape = (
        1.0
        - pp.night_dip * _bump(h, pp.night_dip_hour, pp.night_dip_width_h)
        + pp.morning_ridge * _bump(h, pp.morning_ridge_hour, pp.ridge_width_h)
        + pp.evening_ridge * _bump(h, pp.evening_ridge_hour, pp.ridge_width_h)
    )
    level = _ar1(rng, len(uniq_days), pp.day_level_phi, pp.day_level_sigma)
    noise = rng.standard_normal(len(uh)) * pp.hour_noise_sigma
    hourly = pp.base_level * (shape * (1.0 + level[day_pos]) + noise)
    hourly = np.maximum(hourly, pp.floor)

    return PriceSeries(price=pd.Series(hourly[hour_pos], index=index, name="price"))


def gen_base_load(customer_count, weather, seed, params=None):
    """Residential 5-minute P/Q profiles, temperature-coupled heating.

    Each customer is a daily double-peak shape scaled by household size,
    a heating factor driven by the shared weather series, a weekend uplift
    and multiplicative lognormal noise.  Reactive power follows a fixed
    per-customer power factor drawn from [pf_min, pf_max].
    """
    if customer_count < 1:
        raise ValueError("customer_count must be >= 1")
    lp = params or LoadParams()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    index = weather.index
    n = len(index)
    h = _hour_of_day(index)

    shape = (
        lp.night_floor
        + lp.morning_peak_gain * _bump(h, lp.morning_peak_hour, lp.morning_peak_width_h)
        + lp.evening_peak_gain * _bump(h, lp.evening_peak_hour, lp.evening_peak_width_h)
    )
    shape = shape / shape.mean()
    weekend = np.where(index.dayofweek.to_numpy() >= 5, lp.weekend_factor, 1.0)
    heat_need = np.maximum(lp.heating_ref_c - weather.temperature.to_numpy(), 0.0)

    scale = lp.mean_kw * np.exp(
        rng.normal(-0.5 * lp.scale_sigma ** 2, lp.scale_sigma, size=customer_count)
    )
    share = rng.uniform(lp.heating_share_min, lp.heating_share_max, size=customer_count)
    pf = rng.uniform(lp.pf_min, lp.pf_max, size=customer_count)
    tan_phi = np.tan(np.arccos(pf))

    noise = np.exp(
        rng.normal(-0.5 * lp.noise_sigma ** 2, lp.noise_sigma, size=(customer_count, n))
    )
    p = noise
    p *= (shape * weekend)[None, :]
    p *= 1.0 + share[:, None] * (lp.heating_gain_per_c * heat_need)[None, :]
    p *= scale[:, None]
    q = p * tan_phi[:, None]

    return [
        CustomerProfile(
            p=pd.Series(p[i], index=index, name=f"p_{i}"),
            q=pd.Series(q[i], index=index, name=f"q_{i}"),
            heating_share=float(share[i]),
        )
        for i in range(customer_count)
    ]


def _draw_ev_day(rng, fleet, slot_kwh):
    """Energy (as slot count) and plug window hours for one EV-day."""
    for _ in range(fleet.redraw_cap):
        energy = float(np.clip(
            fleet.energy_mean_kwh * np.exp(
                rng.normal(-0.5 * fleet.energy_sigma ** 2, fleet.energy_sigma)
            ),
            fleet.energy_min_kwh, fleet.energy_max_kwh,
        ))
        arrival = float(np.clip(
            rng.normal(fleet.arrival_mu_h, fleet.arrival_sd_h), *fleet.arrival_clip_h
        ))
        departure = float(np.clip(
            rng.normal(fleet.departure_mu_h, fleet.departure_sd_h), *fleet.departure_clip_h
        ))
        n_slots = max(int(round(energy / slot_kwh)), 1)
        window_h = (24.0 - arrival) + departure
        capacity = int(window_h * STEPS_PER_HOUR)
        if n_slots <= capacity:
            return n_slots, arrival, departure
    raise InfeasibleRequirement(
        f"energy requirement exceeded plug-window capacity {fleet.redraw_cap} times"
    )


def gen_ev_schedule(prices, fleet, seed, return_details=False):
    """Price-greedy smart-charging schedules for a whole fleet.

    Returns (charging kW DataFrame, activation-flag DataFrame), columns per
    bus.  Windows are truncated at index boundaries and gaps (the last
    evening of a segment cannot charge past the data horizon).
    """
    index = prices.index
    price = prices.price.to_numpy()
    ts = index.asi8
    step_ns = 300_000_000_000
    slot_kwh = fleet.charger_kw / STEPS_PER_HOUR
    days = pd.DatetimeIndex(np.unique(index.normalize()))
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    buses = sorted(fleet.count_per_bus)
    power = {b: np.zeros(len(index)) for b in buses}
    details = []
    for bus in buses:
        for _ in range(int(fleet.count_per_bus[bus])):
            for day in days:
                if rng.uniform() >= fleet.participation:
                    continue
                n_slots, arrival, departure = _draw_ev_day(rng, fleet, slot_kwh)
                start = day.value + int(round(arrival * 12)) * step_ns
                stop = day.value + (STEPS_PER_DAY + int(round(departure * 12))) * step_ns
                lo = np.searchsorted(ts, start)
                hi = np.searchsorted(ts, stop)
                if hi <= lo:
                    continue
                take = min(n_slots, hi - lo)
                window_price = price[lo:hi]
                chosen = lo + np.lexsort((np.arange(hi - lo), window_price))[:take]
                power[bus][chosen] += fleet.charger_kw
                if return_details:
                    details.append({
                        "bus": bus,
                        "day": day,
                        "window": (int(lo), int(hi)),
                        "chosen": np.sort(chosen),
                    })

    p = pd.DataFrame(power, index=index)
    flags = p > 0.0
    if return_details:
        return p, flags, details
    return p, flags


@dataclass(frozen=True)
class ScenarioDataset:
    """Aligned per-bus injections plus the signals that generated them."""

    scenario_id: str
    injections_p: pd.DataFrame   # kW, one column per load bus id
    injections_q: pd.DataFrame   # kvar
    flags: pd.DataFrame          # EV-activation booleans, same columns
    prices: PriceSeries
    weather: WeatherSeries
    seed: int
    params: ScenarioParams
    ev_counts: dict              # bus id -> EV count
    ev_energy_kwh: dict          # bus id -> total scheduled energy

    @property
    def index(self):
        return self.injections_p.index


def _ev_counts(scenario_id, sp):
    adj = {b: int(round(sp.customers_per_adjacent * sp.evs_per_customer))
           for b in ADJACENT_IDS}
    subs = {b: int(round(sp.customers_per_leaf * sp.evs_per_customer))
            for b in LEAF_IDS}
    if scenario_id == "S1":
        return {}, {}
    if scenario_id == "S2":
        return adj, {}
    if scenario_id == "S3":
        return adj, subs
    raise ValueError(f"unknown scenario id {scenario_id!r}")


def assemble_scenario(scenario_id, net, seed, params=None, index=None):
    """Build one flexibility scenario on the reference network.

    S1 is base load only; S2 adds price-driven EV fleets behind the five
    adjacent substations; S3 additionally gives every customer under SubS
    an EV.  Base loads, weather, prices and the adjacent fleet schedules
    are derived from scenario-independent child seeds, so S1-S3 with the
    same seed share everything except the added fleets.
    """
    sp = params or ScenarioParams()
    idx = horizon_index() if index is None else index
    ss = np.random.SeedSequence(seed)
    seed_weather, seed_price, seed_load, seed_assign, seed_adj, seed_subs = ss.spawn(6)

    weather = gen_weather(idx, seed_weather, sp.weather)
    prices = gen_prices(idx, seed_price, sp.price)

    n_leaf_cust = sp.customers_per_leaf * len(LEAF_IDS)
    n_total = n_leaf_cust + sp.customers_per_adjacent * len(ADJACENT_IDS)
    profiles = gen_base_load(n_total, weather, seed_load, sp.load)

    order = np.random.default_rng(seed_assign).permutation(n_total)
    assignment = {}
    cursor = 0
    for bus in LEAF_IDS:
        assignment[bus] = order[cursor:cursor + sp.customers_per_leaf]
        cursor += sp.customers_per_leaf
    for bus in ADJACENT_IDS:
        assignment[bus] = order[cursor:cursor + sp.customers_per_adjacent]
        cursor += sp.customers_per_adjacent

    cols = sorted(LOAD_BUS_IDS)
    p = pd.DataFrame(0.0, index=idx, columns=cols)
    q = pd.DataFrame(0.0, index=idx, columns=cols)
    for bus, members in assignment.items():
        p[bus] = np.sum([profiles[i].p.to_numpy() for i in members], axis=0)
        q[bus] = np.sum([profiles[i].q.to_numpy() for i in members], axis=0)

    flags = pd.DataFrame(False, index=idx, columns=cols)
    adj_counts, subs_counts = _ev_counts(scenario_id, sp)
    ev_counts = {**adj_counts, **subs_counts}
    ev_energy = {}
    for counts, child_seed in ((adj_counts, seed_adj), (subs_counts, seed_subs)):
        if not counts:
            continue
        fleet = dataclasses.replace(sp.ev, count_per_bus=counts)
        ev_p, ev_flags = gen_ev_schedule(prices, fleet, child_seed)
        for bus in ev_p.columns:
            p[bus] += ev_p[bus]
            flags[bus] |= ev_flags[bus]
            ev_energy[bus] = float(ev_p[bus].sum() / STEPS_PER_HOUR)

    return ScenarioDataset(
        scenario_id=scenario_id,
        injections_p=p,
        injections_q=q,
        flags=flags,
        prices=prices,
        weather=weather,
        seed=seed,
        params=sp,
        ev_counts=ev_counts,
        ev_energy_kwh=ev_energy,
    )


def save_scenario(ds, path):
    """Persist a scenario as CSV files plus a JSON manifest."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    inj = pd.concat(
        [ds.injections_p.add_prefix("p_"), ds.injections_q.add_prefix("q_")], axis=1
    )
    inj.to_csv(path / "injections.csv", index_label="timestamp")
    ds.prices.price.to_frame().to_csv(path / "prices.csv", index_label="timestamp")
    pd.DataFrame(
        {"temperature": ds.weather.temperature, "solar_radiation": ds.weather.solar_radiation}
    ).to_csv(path / "weather.csv", index_label="timestamp")
    ds.flags.astype(int).add_prefix("flag_").to_csv(
        path / "flags.csv", index_label="timestamp"
    )
    manifest = {
        "scenario": ds.scenario_id,
        "seed": ds.seed,
        "params": ds.params.to_dict(),
        "ev_counts": {str(k): v for k, v in ds.ev_counts.items()},
        "ev_energy_kwh": {str(k): v for k, v in ds.ev_energy_kwh.items()},
        "n_timesteps": len(ds.index),
        "start": ds.index[0].isoformat(),
        "end": ds.index[-1].isoformat(),
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _params_from_dict(d):
    return ScenarioParams(
        customers_per_leaf=d["customers_per_leaf"],
        customers_per_adjacent=d["customers_per_adjacent"],
        evs_per_customer=d["evs_per_customer"],
        load=LoadParams(**d["load"]),
        price=PriceParams(**d["price"]),
        weather=WeatherParams(**{k: tuple(v) if isinstance(v, list) else v
                                 for k, v in d["weather"].items()}),
        ev=EvFleetParams(**{k: tuple(v) if isinstance(v, list) else v
                            for k, v in d["ev"].items()}),
    )


def load_scenario(path):
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    inj = pd.read_csv(path / "injections.csv", index_col="timestamp", parse_dates=True)
    idx = inj.index
    p_cols = [c for c in inj.columns if c.startswith("p_")]
    q_cols = [c for c in inj.columns if c.startswith("q_")]
    p = inj[p_cols].rename(columns=lambda c: int(c[2:]))
    q = inj[q_cols].rename(columns=lambda c: int(c[2:]))
    prices = pd.read_csv(path / "prices.csv", index_col="timestamp", parse_dates=True)
    weather = pd.read_csv(path / "weather.csv", index_col="timestamp", parse_dates=True)
    flags = pd.read_csv(path / "flags.csv", index_col="timestamp", parse_dates=True)
    flags = flags.rename(columns=lambda c: int(c[5:])).astype(bool)
    return ScenarioDataset(
        scenario_id=manifest["scenario"],
        injections_p=p,
        injections_q=q,
        flags=flags,
        prices=PriceSeries(price=prices["price"].rename("price")),
        weather=WeatherSeries(
            temperature=weather["temperature"],
            solar_radiation=weather["solar_radiation"],
        ),
        seed=manifest["seed"],
        params=_params_from_dict(manifest["params"]),
        ev_counts={int(k): v for k, v in manifest["ev_counts"].items()},
        ev_energy_kwh={int(k): v for k, v in manifest["ev_energy_kwh"].items()},
    )
