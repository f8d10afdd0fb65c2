"""
Infrastructure layer containing core components.
"""
