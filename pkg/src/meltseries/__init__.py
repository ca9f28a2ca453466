"""Melt-pool time-series toolkit: distances, symbolic transforms, k-NN
benchmarking and a deterministic synthetic data generator."""

from .dataset import (DatasetFormatError, LabeledDataset, SeriesRecord,
                      TimeSeries, load_dataset, save_dataset)
from .datagen import CounterRng, GenSpec, derive_key, generate
from .distances import (DistanceSpec, dtw_spec, euclidean_spec, make_engine,
                        mean_spec, sax_spec, sfa_spec)
from .elastic import (BandGeometry, DtwSpec, band_geometry, dtw_distance,
                      euclidean_distance, mean_distance)
from .knn import (CandidateResult, GridSearchResult, KnnModel, Neighbor,
                  knn_fit, knn_predict, knn_predict_batch, tune)
from .preprocess import (ButterworthSpec, PaaSpec, butterworth_filter,
                         butterworth_gain, paa, resample_linear, znormalize)
from .protocol import (EvalReport, ModelResult, Summary, TaskError, TaskSpec,
                       make_cv_folds, run_task, split_highlow, split_updown,
                       summarize)
from .symbolic import (McbModel, SaxSpec, SfaSpec, SymbolicDoc, bag_distance,
                       dft_coefficients, gaussian_breakpoints, levenshtein,
                       mcb_train, sax_bag_of_words, sax_mindist,
                       sax_symbolize, sfa_bag_of_words, sfa_word)

__version__ = "0.1.0"

__all__ = [
    "BandGeometry", "ButterworthSpec", "CandidateResult", "CounterRng",
    "DatasetFormatError", "DistanceSpec", "DtwSpec", "EvalReport", "GenSpec",
    "GridSearchResult", "KnnModel", "LabeledDataset", "McbModel",
    "ModelResult", "Neighbor", "PaaSpec", "SaxSpec", "SeriesRecord",
    "SfaSpec", "Summary", "SymbolicDoc", "TaskError", "TaskSpec",
    "TimeSeries", "bag_distance", "band_geometry", "butterworth_filter",
    "butterworth_gain", "derive_key", "dft_coefficients", "dtw_distance",
    "dtw_spec", "euclidean_distance", "euclidean_spec", "gaussian_breakpoints",
    "generate", "knn_fit", "knn_predict", "knn_predict_batch", "levenshtein",
    "load_dataset", "make_cv_folds", "make_engine", "mcb_train",
    "mean_distance", "mean_spec", "paa", "resample_linear", "run_task",
    "save_dataset", "sax_bag_of_words", "sax_mindist", "sax_spec",
    "sax_symbolize", "sfa_bag_of_words", "sfa_spec", "sfa_word",
    "split_highlow", "split_updown", "summarize", "tune", "znormalize",
]
