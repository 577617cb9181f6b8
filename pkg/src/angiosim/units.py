"""Unit conversions between internal and user-facing quantities.

Internal computations run in Pa, mm^3, mm^3/s and s throughout. User-facing
outputs (CSV/JSON, log lines) use mmHg, ml and L/min; these helpers are the
only place the conversion factors live.
"""

PA_PER_MMHG = 133.322
MM3_PER_ML = 1000.0
MM3S_PER_LMIN = 1.0e6 / 60.0


def pa_to_mmhg(p):
    return p / PA_PER_MMHG


def mmhg_to_pa(p):
    return p * PA_PER_MMHG


def mm3_to_ml(v):
    return v / MM3_PER_ML


def ml_to_mm3(v):
    return v * MM3_PER_ML


def mm3s_to_lmin(q):
    return q / MM3S_PER_LMIN


def lmin_to_mm3s(q):
    return q * MM3S_PER_LMIN
