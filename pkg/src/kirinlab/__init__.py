"""Modelling toolkit for distributed IPv6 prefix de-aggregation attacks on BGP.

Covers topology ingestion, customer cones and provider funnels, the transit and
peering attack-planning ILPs, non-aggregatable announcement schedules, route
propagation, router RIB exhaustion and ingress-filter defenses.
"""

__version__ = "0.1.0"
