"""Userspace static-key VPN tunnel with an RFC-style benchmark harness and
a deterministic link simulator."""

__version__ = "0.1.0"
