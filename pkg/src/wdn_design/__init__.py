# src/wdn_design/__init__.py

"""Least-cost pipe sizing for gravity-fed water distribution networks."""

__version__ = "0.1.0"
