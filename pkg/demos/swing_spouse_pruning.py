"""
Spouse pruning on a ten-bus swing network
=========================================

The magnitude test keeps every strict spouse pair of the mesh; the phase
test removes them.
"""

# %%
from phasetopo import InferenceParams, learn_topology, make_fixture
from phasetopo.inference import spouse_pruning_effectiveness

fx = make_fixture("swing-mesh-10")
print(fx.description)
print(len(fx.true_topology), "lines,", len(fx.strict_spouses), "strict spouse pairs")

# %%
panel = fx.simulate(200_000, seed=0)
report = learn_topology(panel, InferenceParams(rho=0.05), workers=2)
kept = report.moral_edges & fx.strict_spouses
print("spouse pairs after the magnitude test:", len(kept))
print("spouse pairs after the phase test:",
      len(report.topology_edges & fx.strict_spouses))
print("effectiveness:", spouse_pruning_effectiveness(
    report.moral_edges, report.topology_edges, fx.strict_spouses))
print("missed lines:", sorted(fx.true_topology - report.topology_edges))
