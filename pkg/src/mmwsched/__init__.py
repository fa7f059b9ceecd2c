"""Joint UE and beam selection for multi-AP millimeter-wave networks."""
from .errors import CapacityError, InstanceFormatError, ValidationError
from .instance import (Instance, RssTensor, Selection, jain_fairness_index, load_instance,
                       random_instance, rate_given_vectors, save_instance, weighted_sum_rate)
from .matching import max_weight_matching, optimal_ue_assignment
from .exhaustive import exhaustive_select
from .mcmc import McmcParams, mcmc_select
from .lig import LigParams, build_game, lig_select
from .greedy import GreedyParams, ngub1, ngub2

__version__ = "0.1.0"
