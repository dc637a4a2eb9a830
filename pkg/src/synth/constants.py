class GeometryKinds:
    SLAB_STACK = 'slab-stack'
    VORONOI = 'voronoi-grains'
    CARTOON3 = 'cartoon3'

    ALL = (SLAB_STACK, VORONOI, CARTOON3)


# Six tetrahedra per cube along the main diagonal; identical in every cube so
# the split is conformal across cube faces.
KUHN_AXIS_ORDERS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))
