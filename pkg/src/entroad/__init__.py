"""entroad: compositional thermostatics.

A thermostatic system is a convex state space carrying a concave entropy.
Systems compose along convex relations: the operad algebra sums their
entropies and maximises the sum subject to the relation.
"""

__version__ = "0.1.0"
