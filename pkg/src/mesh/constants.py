class Fields:
    BETA = 'beta'
    GAMMA = 'gamma'

    ALL = (BETA, GAMMA)


# Local corner indices of the 4 faces and 6 edges of a tetrahedron.
TET_FACES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))
TET_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

# Coordinates are quantized to this fraction of the bounding-box diagonal
# when looking for geometrically coincident faces.
COINCIDENCE_TOLERANCE = 1e-9
