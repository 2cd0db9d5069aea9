"""Bundled demo study: a two-subsystem NDS with known analysis outcomes.

Both subsystems are the same second-order continuous-time circuit-style
model.  The fixture ships with a reference SCM, one SCM that produces an
identical external transfer matrix, one that provably differs, and four
random connection samples used by the sweep command.
"""

from __future__ import annotations

from fractions import Fraction as F

from .model import NdsDefinition, SCMatrix, SubsystemRealization


def demo_subsystem() -> SubsystemRealization:
    return SubsystemRealization(
        E=((F(1), F(0)), (F(0), F(1))),
        A_xx=((F(-2), F(-1)), (F(4), F(-7))),
        B_xv=((F(-3, 10), F(1, 10)), (F(11, 10), F(8, 10))),
        B_xu=((F(0),), (F(1),)),
        C_zx=((F(1), F(1)),),
        C_yx=((F(1), F(-1)),),
        D_zv=((F(0), F(-1)),),
        D_zu=((F(0),),),
        D_yv=((F(0), F(0)),),
        D_yu=((F(0),),),
    )


def demo_nds() -> NdsDefinition:
    sub = demo_subsystem()
    return NdsDefinition(subsystems=(sub, sub), time_domain="continuous")


# Reference connection for the identifiability study.
PHI0 = SCMatrix.from_rows([
    ["0", "0"],
    ["0", "0"],
    ["1", "0"],
    ["0", "0"],
])

# Different SCM with the same external behavior (inside the
# undifferentiable region of PHI0).
PHI_EQUIV = SCMatrix.from_rows([
    ["0", "0"],
    ["0", "0"],
    ["0", "0"],
    ["2", "0"],
])

# SCM whose external behavior provably differs from PHI0's.
PHI_DIFF = SCMatrix.from_rows([
    ["0", "1"],
    ["0", "0"],
    ["1", "0"],
    ["0", "0"],
])

# Four random connection samples for the tau sweep, drawn once uniformly
# from [-2, 2] per entry and frozen here.
SWEEP_DIRECTIONS = (
    SCMatrix.from_rows([
        ["1.1732", "0.4875"],
        ["-0.5079", "-0.4236"],
        ["2.3282", "-0.5629"],
        ["1.0153", "-1.6446"],
    ]),
    SCMatrix.from_rows([
        ["0.4634", "-1.5646"],
        ["-1.3977", "-1.3546"],
        ["2.3531", "-0.8120"],
        ["0.9047", "-0.3057"],
    ]),
    SCMatrix.from_rows([
        ["0.4667", "0.3628"],
        ["-0.7651", "-0.7875"],
        ["-0.6597", "-1.3277"],
        ["1.5073", "-0.6405"],
    ]),
    SCMatrix.from_rows([
        ["-0.4462", "0.3897"],
        ["-0.9077", "-0.3658"],
        ["0.1943", "0.9004"],
        ["0.6469", "-0.9311"],
    ]),
)


def demo_model_json() -> dict:
    """The demo NDS in model-file form (handy for CLI examples and tests)."""
    def as_strings(m):
        return [[str(x) for x in row] for row in m]

    sub = demo_subsystem()
    raw = {name: as_strings(getattr(sub, name))
           for name in ("E", "A_xx", "B_xv", "B_xu", "C_zx", "C_yx",
                        "D_zv", "D_zu", "D_yv", "D_yu")}
    return {
        "time_domain": "continuous",
        "subsystems": [raw, raw],
        "scm": as_strings(PHI0.entries),
    }
