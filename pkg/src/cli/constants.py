class Commands:
    SIMULATE = 'simulate'
    FIT = 'fit'
    DIAGNOSE = 'diagnose'
    VALIDATE_MESH = 'validate-mesh'

    ALL = (SIMULATE, FIT, DIAGNOSE, VALIDATE_MESH)


class ConfigSections:
    RUN = 'run'
    SYNTH = 'synth'
    PRIORS = 'priors'
    CHAIN = 'chain'

    ALL = (RUN, SYNTH, PRIORS, CHAIN)


class ExitCodes:
    OK = 0
    CONFIG = 2
    NUMERIC = 3
    IO = 4


MESH_FILE = 'mesh.txt'
OBSERVATIONS_FILE = 'observations.csv'
TRUTH_FILE = 'truth.json'
