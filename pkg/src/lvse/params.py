"""All tunable physical and generator constants in one place.

The reference feeder is synthetic: impedances are picked from typical Danish
LV cable data (R/X around 2-3 on LV segments) and sized so that coincident
smart-charging peaks in the high-flexibility scenario produce 0.03-0.08 pu
dips at the monitored leaf nodes.  Everything that shapes the generated data
lives here so a run manifest can record it wholesale.
"""

from dataclasses import dataclass, field, asdict

#: System power base, kVA.  All per-unit quantities use this base.
S_BASE_KVA = 400.0

#: Per-unit line impedances of the reference network (r, x).
#: HV slack -> MV busbar: upstream grid plus 60/10 kV transformer.
Z_PRIMARY_TX = (0.001, 0.008)
#: MV busbar -> adjacent secondary substation (cable + 10/0.4 kV transformer).
Z_MV_FEEDER = (0.008, 0.024)
#: MV busbar -> SubS LV busbar (cable + 10/0.4 kV transformer).
Z_SUBS_TX = (0.012, 0.040)
#: LV trunk segment between feeder junctions (R/X = 2.5).
Z_LV_TRUNK = (0.030, 0.012)
#: LV side branch from a junction to a monitored leaf (R/X = 2.5).
Z_LV_BRANCH = (0.040, 0.016)

#: Leaf nodes (monitored) and customers attached to each.
CUSTOMERS_PER_LEAF = 8
#: Residential customers aggregated behind each adjacent secondary substation.
CUSTOMERS_PER_ADJACENT = 48


@dataclass(frozen=True)
class LoadParams:
    """Residential base-load generator constants."""

    mean_kw: float = 0.55           # median household mean demand
    scale_sigma: float = 0.30       # lognormal spread of household size
    noise_sigma: float = 0.32       # per-step multiplicative lognormal noise
    pf_min: float = 0.90            # power-factor band (inductive)
    pf_max: float = 0.98
    heating_share_min: float = 0.20
    heating_share_max: float = 0.90
    heating_ref_c: float = 14.0     # no heating demand above this temperature
    heating_gain_per_c: float = 0.045
    weekend_factor: float = 1.08
    # daily double-peak shape: bumps on a night floor, normalised to mean 1
    night_floor: float = 0.55
    morning_peak_hour: float = 7.5
    morning_peak_gain: float = 0.9
    morning_peak_width_h: float = 1.6
    evening_peak_hour: float = 18.5
    evening_peak_gain: float = 1.9
    evening_peak_width_h: float = 2.2


@dataclass(frozen=True)
class PriceParams:
    """Retail price generator constants (currency/kWh, hourly blocks)."""

    base_level: float = 1.50
    night_dip: float = 0.55         # depth of the 03:00 valley
    night_dip_hour: float = 3.0
    night_dip_width_h: float = 2.6
    morning_ridge: float = 0.35
    morning_ridge_hour: float = 9.0
    evening_ridge: float = 0.50
    evening_ridge_hour: float = 19.0
    ridge_width_h: float = 2.0
    day_level_sigma: float = 0.12   # day-to-day AR(1) level noise
    day_level_phi: float = 0.6
    hour_noise_sigma: float = 0.05  # per-hour noise, fraction of base
    floor: float = 0.05


@dataclass(frozen=True)
class WeatherParams:
    """Ambient temperature and solar radiation generator constants."""

    t_mean_c: float = 8.5
    t_annual_amp_c: float = 8.5     # coldest mid January, warmest mid July
    t_daily_amp_c: float = 2.5      # warmest mid afternoon
    t_noise_sigma: float = 1.8
    t_noise_corr_steps: float = 144.0   # AR(1) memory, 5-min steps (~12 h)
    daylength_mean_h: float = 12.25
    daylength_amp_h: float = 5.25   # 7 h winter .. 17.5 h summer
    solar_max_winter: float = 110.0
    solar_max_summer: float = 820.0
    cloud_min: float = 0.25         # daily clear-sky fraction lower bound
    cloud_intraday_sigma: float = 0.05
    cloud_intraday_corr_steps: float = 72.0


@dataclass(frozen=True)
class EvFleetParams:
    """Smart-charging fleet description.

    count_per_bus maps bus id -> number of EVs attached there.  Daily energy
    draws are quantised to whole 5-minute charger slots so scheduled energy
    is bookkept exactly.
    """

    count_per_bus: dict = field(default_factory=dict)
    charger_kw: float = 3.7
    energy_mean_kwh: float = 7.0
    energy_sigma: float = 0.45      # lognormal sigma of daily energy
    energy_min_kwh: float = 1.0
    energy_max_kwh: float = 25.0
    arrival_mu_h: float = 18.0
    arrival_sd_h: float = 1.5
    arrival_clip_h: tuple = (15.0, 22.0)
    departure_mu_h: float = 7.0
    departure_sd_h: float = 1.0
    departure_clip_h: tuple = (4.0, 10.0)
    participation: float = 0.85     # probability an EV plugs in on a given day
    redraw_cap: int = 10


@dataclass(frozen=True)
class ScenarioParams:
    """Everything a scenario assembly needs besides the network and seed."""

    customers_per_leaf: int = CUSTOMERS_PER_LEAF
    customers_per_adjacent: int = CUSTOMERS_PER_ADJACENT
    evs_per_customer: float = 1.0
    load: LoadParams = field(default_factory=LoadParams)
    price: PriceParams = field(default_factory=PriceParams)
    weather: WeatherParams = field(default_factory=WeatherParams)
    ev: EvFleetParams = field(default_factory=EvFleetParams)

    def to_dict(self):
        return asdict(self)
