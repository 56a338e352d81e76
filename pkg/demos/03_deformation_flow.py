"""Flow an SU(2) orbit from t = 0.5 to t = 0.1 and certify the map."""
import numpy as np

from plcheck.gw_flow import FlowConfig, integrate_flow, reversibility_error, symplecto_residual
from plcheck.lie_su import dominant_project, random_cartan_form, random_su

rng = np.random.default_rng(2)
u = random_cartan_form(rng, 2)
seeds = [random_su(rng, 2)]
cfg = FlowConfig(0.5, 0.1, u, steps=50)

flow = integrate_flow(seeds, cfg)
print("seed  :", np.round(flow.seeds[0], 6).tolist())
print("final :", np.round(flow.finals[0], 6).tolist())
print("dominant weight before/after:", dominant_project(flow.seeds[0]), dominant_project(flow.finals[0]))
print("largest per-step error estimate:", max(flow.diagnostics["error_estimate"]))

rep = symplecto_residual(flow, n_pairs=10)
print(f"symplectic residual: max {rep.max:.2e}, median {rep.median:.2e}")
print(f"forward then back  : {reversibility_error(seeds, cfg):.2e}")
