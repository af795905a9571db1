import math
import re

import pytest

from inspection_timing import PERFECT, ModelParams

# Named parameter sets used across the suite (all with r = 0.5).
# lambda1 = 2, lambda0 = 1, U0 = 2, U1 = 1.25
INNOVATION = ModelParams(lambda_g=1.5, lambda_b=0.5, r=0.5, delta=PERFECT, u0=2.0, u1=2.5)
# lambda1 = 1, lambda0 = 2, U0 = 2, U1 = 1.25
MAINTENANCE = ModelParams(lambda_g=0.5, lambda_b=1.5, r=0.5, delta=PERFECT, u0=4.0, u1=1.25)
MAINTENANCE_NOISY = MAINTENANCE.with_(delta=5.0)
# lambda1 = 2, lambda0 = 1, U0 = 2, U1 = 1
PERIODIC_LN2 = ModelParams.from_derived(1.0, 2.0, 2.0, 1.0, PERFECT)
# lambda0 = lambda1 = 1.5, delta = 1, rho = 1.5, U0 = 1.2, U1 = 1
RECOVERY = ModelParams.from_derived(1.5, 1.5, 1.2, 1.0, 1.0, rho=1.5)

LN2 = math.log(2.0)

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def acceptance():
    return ACCEPTANCE


