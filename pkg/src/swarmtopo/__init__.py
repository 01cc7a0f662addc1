"""Two-stage resilient topology control for UAV swarms."""
