"""
Router integration tests package.
"""
