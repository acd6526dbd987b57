"""Edge-cloud facility siting and survivable primary/backup VNF placement."""

from .centrality import (
    SiteSelection,
    closeness_centrality,
    coverage_metrics,
    select_sites_cc,
    select_sites_random,
    select_sites_top_k,
)
from .model import (
    DEFAULT_SERVICE_TYPES,
    CostModel,
    Instance,
    ResourceSpec,
    ServiceRequest,
    ServiceType,
    Slot,
    Solution,
    check_feasibility,
    evaluate_cost,
    generate_requests,
)
from .topology import DelayMatrix, Topology, all_pairs_delay, load_topology, parse_sndlib

__version__ = "0.1.0"
