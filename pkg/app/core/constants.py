# Label ranges sampled during collection and used for output normalization
LABEL_RANGES = {
    "R_MM": (-6.0, 9.0),
    "THETA_DEG": (-45.0, 45.0),
}

# Sensor lattice and tap protocol
SENSOR_SETTINGS = {
    "RING_COUNT": 6,  # 127 pins
    "PIN_PITCH_MM": 3.0,
    "PAD_RADIUS_MM": 20.0,  # 40 mm-diameter pad
}

CONTACT_DEFAULTS = {
    "DEPTH_ABOVE_MM": 1.5,
    "PRESS_MM": 5.0,
    "FRAMES_PER_TAP": 20,
    "DEPTH_OFFSET_MM": 0.0,
    "SLIDE_DROP_MM": 3.0,
    "SLIDE_FRAMES": 5,
}

PEAK_WINDOW = 7

# Pin-field deformation model
DEFORMATION_DEFAULTS = {
    "STIFFNESS_K": 0.6,
    "EDGE_SOFTNESS_MM": 1.0,
    "FREE_SPACE_RATIO": 0.25,
}

SHEAR_DEFAULTS = {
    "DECAY": 0.7,
    "GAIN": 0.5,
    "CAP_MM": 3.0,
}

# 2D stand-in for the +-1 deg yaw/pitch jitter
JITTER_SETTINGS = {
    "SCALE_LOW": 0.995,
    "SCALE_HIGH": 1.005,
    "MAX_OFFSET_MM": 0.2,
}

ADAM_DEFAULTS = {
    "LEARNING_RATE": 1e-4,
    "DECAY": 1e-6,
    "BETA1": 0.9,
    "BETA2": 0.999,
    "EPSILON": 1e-8,
}

TRAINING_DEFAULTS = {
    "BATCH_SIZE": 32,
    "MAX_EPOCHS": 100,
    "PATIENCE": 5,
    "DROPOUT": 0.25,
    "SHIFT_FRACTION": 0.02,
    "TRAIN_SAMPLES": 1600,
    "VAL_SAMPLES": 400,
}

ARCHITECTURE_SETTINGS = {
    "BLOCK_FILTERS": (8, 16, 16, 32, 32),
    "BLOCK_KERNEL": 3,
    "DENSE_UNITS": 64,
    "FRONT_FILTERS": 8,
    "FRONT_KERNEL": 5,
    "FRONT_LAYERS": 2,
}

SERVO_DEFAULTS = {
    "GAIN_R": 1.0,
    "GAIN_THETA": 1.0,
    "R0_MM": 0.0,
    "THETA0_DEG": 0.0,
    "STEP_MM": 3.0,
    "LOST_EDGE_MM": 20.0,
    "CLOSURE_FACTOR": 1.5,
    "CLOSURE_MIN_FRACTION": 0.5,
    "MAX_STEPS_FACTOR": 4,
}

# Disk grid rows as (mode, experiment, parameter, value)
TABLE1_GRID = (
    ("tap", "initial contact", "start_r", -6.0),
    ("tap", "initial contact", "start_r", 0.0),
    ("tap", "initial contact", "start_r", 9.0),
    ("tap", "step size", "step", 6.0),
    ("tap", "step size", "step", 9.0),
    ("tap", "set-point radius", "r0", -2.0),
    ("tap", "set-point radius", "r0", 6.0),
    ("tap", "contact depth", "depth_offset", -1.5),
    ("tap", "contact depth", "depth_offset", 2.5),
    ("slide", "initial contact", "start_r", -6.0),
    ("slide", "initial contact", "start_r", 0.0),
    ("slide", "initial contact", "start_r", 9.0),
    ("slide", "step size", "step", 6.0),
    ("slide", "step size", "step", 9.0),
    ("slide", "set-point radius", "r0", -3.0),
    ("slide", "set-point radius", "r0", 2.0),
    ("slide", "contact depth", "depth_offset", -1.0),
    ("slide", "contact depth", "depth_offset", 3.0),
)

OBJECT_NAMES = (
    "disk",
    "volute",
    "spiral",
    "teardrop",
    "clover",
    "brick",
    "irregular",
    "edge",
)

DISK_RADIUS_MM = 52.5

FILE_FORMATS = {
    "DATASET_MAGIC": b"TCDS",
    "DATASET_VERSION": 1,
    "MODEL_MAGIC": b"TCNN",
    "MODEL_VERSION": 1,
}

EXIT_CODES = {
    "OK": 0,
    "USAGE": 2,
    "RUNTIME": 3,
}

TRAJECTORY_CSV_COLUMNS = (
    "step",
    "x_mm",
    "y_mm",
    "heading_deg",
    "pred_r_mm",
    "pred_theta_deg",
    "gt_r_mm",
    "gt_theta_deg",
    "dr_mm",
    "dtheta_deg",
    "de_mm",
    "in_contact",
    "status",
)

SVG_SETTINGS = {
    "PX_PER_MM": 2.0,
    "MARGIN_PX": 20.0,
    "TICK_EVERY": 5,
    "TICK_LENGTH_MM": 4.0,
    "CONTOUR_COLOR": "#000000",
}
