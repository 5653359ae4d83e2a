"""Kendall rank correlation matrices and their Tracy-Widom edge."""
