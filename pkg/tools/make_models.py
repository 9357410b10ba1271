"""Regenerate the bundled model files in src/polyreach/data from the builders."""

from pathlib import Path

from polyreach.models import (BEES_VARS, CARDIAC_VARS, LOC1_STIM, BeesConfig,
                              CardiacConfig, build_bees, build_cardiac,
                              cardiac_unsafe)
from polyreach.serialization import Model, save_model

DATA = Path(__file__).resolve().parents[1] / "src" / "polyreach" / "data"


def bees(name, cfg: BeesConfig, splits):
    sys, events = build_bees(cfg)
    params = ["beta2"] if sys.param_dim else []
    extra = {"consensus": {"N": cfg.N, "threshold": 0.3, "window": 500},
             "config": {"alpha": cfg.alpha, "beta1N": cfg.beta1N, "beta2N": list(cfg.beta2N),
                        "gamma": cfg.gamma, "delta": cfg.delta_bee, "h": cfg.h, "N": cfg.N,
                        "discovery_step": cfg.discovery_step, "discovery_seed": cfg.discovery_seed}}
    m = Model(name=name, variables=list(BEES_VARS), parameters=params, params=sys.params, system=sys,
              initial=cfg.initial, template="box", events=events, steps=cfg.steps,
              strategy={"param_splits": list(splits)} if splits and sys.param_dim else {}, extra=extra)
    save_model(m, DATA / f"{name}.json")


def cardiac(name, cfg: CardiacConfig):
    ha = build_cardiac(cfg)
    m = Model(name=name, variables=list(CARDIAC_VARS), parameters=[], params=ha.locations[0].system.params,
              hybrid=ha, initial=ha.initial[0][1], steps=cfg.steps, unsafe=cardiac_unsafe(cfg),
              region={"param_axes": [2, 3], "fix": [[0, 0.0], [4, 0.0]], "locations": [LOC1_STIM],
                      "grid": [8, 8]},
              extra={"config": {"e_amp": cfg.e_amp, "stim_cutoff": cfg.stim_cutoff, "h": cfg.h,
                                "g1_range": list(cfg.g1_range), "g2_range": list(cfg.g2_range),
                                "guard12": cfg.guard12, "guard23": cfg.guard23}})
    save_model(m, DATA / f"{name}.json")


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    bees("bees_no_consensus", BeesConfig(alpha=0.7, beta2N=(1.0, 1.2), initial_halfwidth=0.0), (500,))
    bees("bees_site2", BeesConfig(alpha=0.7, beta2N=(1.5, 2.0), initial_halfwidth=0.0), (500,))
    bees("bees_site1", BeesConfig(alpha=0.2, beta2N=(1.0, 1.2), initial_halfwidth=0.0), (500,))
    bees("bees_precision", BeesConfig(alpha=0.7, beta2N=(1.2, 1.2), steps=150), None)
    cardiac("cardiac", CardiacConfig())
