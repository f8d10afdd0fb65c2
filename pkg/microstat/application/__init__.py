"""
Application layer containing workflows and run manifests.
"""
