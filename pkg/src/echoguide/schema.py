"""Fixed 47-landmark schema for the A4CH view.

Landmarks 0..41 trace the LV endocardial contour (21 tracing segments, two
endpoints each, in tracing-table row order: row k contributes ids 2k and
2k+1). The first tracing row is the long axis, so id 0 is the LV apex and
id 1 the mitral-valve end. Ids 42..46 are the auxiliary chamber landmarks.
"""

NUM_CONTOUR_LANDMARKS = 42
AUX_LANDMARKS = ("RV", "RA", "LA", "TV", "TVA")

LANDMARK_NAMES: tuple[str, ...] = tuple(
    f"lv_contour_{i:02d}" for i in range(NUM_CONTOUR_LANDMARKS)
) + AUX_LANDMARKS

NUM_LANDMARKS = len(LANDMARK_NAMES)  # 47

LANDMARK_INDEX = {name: i for i, name in enumerate(LANDMARK_NAMES)}

# Human-readable aliases for the contour endpoints of the long-axis row.
LV_APEX = "lv_contour_00"
MITRAL_VALVE = "lv_contour_01"

# Subset forwarded to the pose scorer (and rendered as conditioning channels).
KEY_LANDMARKS: tuple[str, ...] = (LV_APEX, MITRAL_VALVE, "RV", "TV", "RA", "LA")
KEY_LANDMARK_INDICES = tuple(LANDMARK_INDEX[name] for name in KEY_LANDMARKS)

# Annotator confidence levels, 1 best.
VISIBILITY_LEVELS = (1, 2, 3)
