class AmodalPoseEstimator:
    pass
