"""
Business layer - Fabric geometry, shading and the reference oracle.

Contains the weave patterns, procedural yarn geometry, the fiber
microflake shading model, Monte Carlo footprint aggregation and the
query sampling that feeds dataset generation.
"""
