"""The single JSON parameter document shared by ``fit`` and ``price``."""

import json

from .errors import ValidationError
from .jump_model import JumpParams
from .pricing import GJDModel
from .qgaussian import QGaussianParams

PRICING_KEYS = ("q", "beta", "s_daily", "tau", "m", "nu")


def build(qfit, annual_jumps, daily_jumps, **extra):
    doc = dict(qfit.to_dict())
    doc.update({
        "gamma": annual_jumps.gamma,
        "p": annual_jumps.p,
        "s_annual": annual_jumps.s,
        "s_daily": daily_jumps.s,
        "tau": annual_jumps.tau,
        "m": annual_jumps.m,
        "nu": annual_jumps.nu,
    })
    doc.update(extra)
    return doc


def model_from(doc):
    """GJD model from a parameter document; ``tau`` wins over ``p`` when both exist."""
    doc = dict(doc)
    if "tau" not in doc and "p" in doc:
        doc["tau"] = doc["p"] / (1.0 - doc["p"])
    missing = [k for k in PRICING_KEYS if k not in doc]
    if missing:
        raise ValidationError(f"parameter document lacks {', '.join(missing)}")
    try:
        diffusion = QGaussianParams(float(doc["q"]), float(doc["beta"]))
        jumps = JumpParams.from_gamma_law(float(doc["s_daily"]), float(doc["tau"]),
                                          m=float(doc["m"]), nu=float(doc["nu"]),
                                          horizon="daily")
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"invalid parameter document: {exc}") from exc
    return GJDModel(diffusion, jumps)


def write(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    return doc


# Reference SPY calibration, all per trading day
SPY_REFERENCE = {
    "q": 1.4,
    "beta": 14582.54,
    "gamma": 0.029,
    "p": 0.35,
    "s_daily": 0.029,
    "tau": 0.54,
    "m": 0.9923,
    "nu": 0.03777,
    "method": "spy_reference",
}
