"""Topology of linearly coupled dynamical networks from nodal time series.

Multivariate non-causal Wiener filters give the moral graph of the network;
the phase of each filter then separates true neighbors from spouses (nodes
that only share a neighbor).  The package also contains the simulators,
closed-form oracles and static graphical-lasso baselines used to check it.
"""

__version__ = "0.1.0"

from .baselines import (PrecisionEstimate, empirical_covariance, glasso_sign_pruned_topology,
                        glasso_topology, graphical_lasso)
from .dynamics import (DiscreteModel, NoiseSpec, PhysicalModelSpec, TimeSeriesPanel,
                       build_model, detrend, gen_noise, simulate, stationary_covariance)
from .errors import (ConvergenceError, IllConditionedError, InsufficientSamplesError,
                     TopologyError, UnstableModelError)
from .fixtures import Fixture, SweepResult, make_fixture, run_sweep
from .graphs import (GenerativeGraph, kin_sets, moral_graph_of, relative_error,
                     strict_two_hop_pairs, topology_of)
from .inference import (InferenceParams, InferenceReport, learn_moral_graph, learn_topology,
                        prune_spouse_edges)
from .oracle import PhaseClass, analytic_wiener, brute_force_wiener, classify_pair
from .wiener import (FilterBank, FrequencyGrid, fit_wiener_fir, fit_wiener_fir_group_lasso,
                     freq_response)
