"""angiosim: reduced-order coronary angiography simulation and calibration.

Closed-loop 0D cardiovascular hemodynamics coupled to 1D contrast transport
on a coronary branch network, synthetic angiogram rendering with contrast
intensity profiles, and the two-stage calibration pipeline that fits the
model to patient pressure/volume targets and angiographic profiles.
"""

__version__ = "0.1.0"
