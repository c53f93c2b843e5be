"""Magnetic-field sensing from the rotation of OAM interference patterns."""
from .errors import (AmbiguousPeak, DegenerateMask, DomainError, InsensitiveOperatingPoint, NoCrossing,
                     OutsideMonotoneBranch, PGMFormatError)
from .magnetometer import CalibrationResult, FieldSweepRecord, calibrate_offset, fit_symmetry_center, invert_theta, precision
from .nmor_model import (DEFAULT_MEDIUM, DispersionSample, MediumParams, find_extrema, find_zero_crossing,
                         larmor_frequency, monotone_limit, rotation_angle, sweep, weak_field_slope)
from .oam_state import (BirefringenceSetting, HybridState, ScalarPattern, apply_birefringence, initial_state,
                        intensity_at, phase_shift, project_horizontal)
from .pattern_image import (ImageGeometry, NoiseSpec, PatternImage, add_noise, azimuthal_profile, read_image,
                            render, write_image)
from .rotation_estimator import (CorrelationCurve, EstimatorConfig, RotationEstimate, correlation,
                                 correlation_curve, estimate_rotation, rotate_image, unwrap_sequence)

__version__ = "0.1.0"
