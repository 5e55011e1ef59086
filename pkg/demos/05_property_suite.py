"""
Executable no-signalling checks
===============================

Run the property suite: exact statements must hold to integration accuracy
and their sharpness controls (hypotheses deliberately broken) must fail.
"""
from nlsignal.verify import run_suite, suite_ok

reports = run_suite(seed=0)
for r in reports:
    kind = "control " if r.control else "property"
    status = "ok" if r.as_expected else "UNEXPECTED"
    print(f"{kind} {r.name:32s} violation {r.max_violation:10.3e}  tol {r.tolerance:.0e}  {status}")
print("\nsuite as expected:", suite_ok(reports))
