"""Random walks with complete memory and isotropic stable steps.

The walk can be built three ways that share one law: directly in time,
as a percolated random recursive tree with one spin per cluster, and as a
Yule process with mutation.  Submodules:

* :mod:`sharkswim.stable_rng`: random streams and samplers.
* :mod:`sharkswim.walk`: direct simulation (P, Q and elephant dynamics).
* :mod:`sharkswim.rrt`: percolated trees and the exact enumeration oracle.
* :mod:`sharkswim.yule`: Yule process with mutation.
* :mod:`sharkswim.analytics`: closed forms and limit constants.
* :mod:`sharkswim.verifier`: characteristic-function checks and regime experiments.
* :mod:`sharkswim.cli`: command-line interface.
"""

__version__ = "0.1.0"
