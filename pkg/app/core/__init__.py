"""
Numerical core: terrain, splines, kinematics, optimization, datasets and tracking math.
"""
