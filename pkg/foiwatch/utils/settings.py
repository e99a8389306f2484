DEFAULT_DIM = 1024

# Tracker
DEFAULT_IOU_THRESHOLD = 0.5
DEFAULT_FEATURE_THRESHOLD = 0.70
DEFAULT_MAX_MISSES = 30
DEFAULT_BUFFER_SIZE = 5

# Alerts
DEFAULT_APPROACH_WINDOW = 5

# Losses
DEFAULT_TRIPLET_MARGIN = 0.2
PROBABILITY_CLAMP = 1e-12
DICE_SMOOTHING = 1e-6

# Snapshot format
STORE_FORMAT = 'foi-store'
STORE_VERSION = 1

UNCLASSIFIED_LABEL = 'unclassified'
