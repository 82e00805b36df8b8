"""Routers for stored runs and stateless scoring."""
