"""Dynamic filter front-end, audio features and verification metrics."""

from ._dynfilt import (
    Error,
    FrontEnd,
    account,
    eer,
    gradcheck,
    logmel,
    mfcc,
    min_dcf,
    mix_at_snr,
    read_feature_file,
    read_wav,
    write_feature_file,
    write_wav,
)

__all__ = [
    "Error",
    "FrontEnd",
    "account",
    "eer",
    "gradcheck",
    "logmel",
    "mfcc",
    "min_dcf",
    "mix_at_snr",
    "read_feature_file",
    "read_wav",
    "write_feature_file",
    "write_wav",
]
