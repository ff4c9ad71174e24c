"""Block-structured correlation estimation.

Pipeline: sample correlation matrix -> two-cluster split of the columns ->
block averaging of R within and across the two clusters -> expansion back to
a full p x p matrix with unit diagonal.

Two clustering rules are provided.  The default ("adaptive") screens on each
column's mean correlation with every other column: columns of the small,
weakly correlated group sit well below the bulk, so a robust core is picked
with a median/MAD cut and the final split thresholds between the core center
and the bulk median.  The alternative ("complete_linkage") cuts a
complete-linkage dendrogram at two clusters; it is kept for comparison but is
much less reliable when the cross-group correlation exceeds the within-group
one of the small group.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist, squareform

from .errors import ZeroVarianceColumnError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleCorrelation:
    """Sample correlation matrix R together with the per-column sds."""

    R: np.ndarray
    column_sds: np.ndarray

    @property
    def p(self) -> int:
        return self.R.shape[0]


@dataclass(frozen=True)
class BlockCorrelationModel:
    """Two-cluster block model: labels in {1, 2} plus block coefficients.

    ``rho`` is 2x2 symmetric: rho[0, 0] and rho[1, 1] are the averaged
    within-cluster off-diagonal correlations, rho[0, 1] the cross-cluster one.
    """

    cluster_of: np.ndarray
    rho: np.ndarray
    cluster_sizes: tuple[int, int]

    @property
    def p(self) -> int:
        return self.cluster_of.shape[0]


def sample_correlation(X: np.ndarray) -> SampleCorrelation:
    """Sample correlation of the columns of X, 1/(n-1) normalization.

    Raises
    ------
    ZeroVarianceColumnError
        If any column is constant (its sd is zero), reporting the indices.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least two rows to estimate a correlation matrix")
    Xc = X - X.mean(axis=0)
    S = (Xc.T @ Xc) / (n - 1)
    sds = np.sqrt(np.diag(S))
    zero = np.flatnonzero(sds == 0.0)
    if zero.size:
        raise ZeroVarianceColumnError(zero)
    R = S / np.outer(sds, sds)
    np.fill_diagonal(R, 1.0)
    R = 0.5 * (R + R.T)
    return SampleCorrelation(R=R, column_sds=sds)


def complete_linkage_two_clusters(
    corr: SampleCorrelation, dissimilarity: str = "profile"
) -> np.ndarray:
    """Cut a complete-linkage dendrogram at exactly two clusters.

    ``dissimilarity`` selects the pairwise distance:

    * ``"profile"`` (default): Euclidean distance between rows of R, i.e.
      columns are close when they correlate the same way with everything.
      With the two-block structure this separates the groups even when the
      cross-block correlation exceeds the within-block one.
    * ``"one_minus_r"``: the direct 1 - R[i, j] dissimilarity.

    Labels are in {1, 2}; the cluster containing column 0 is always labeled 1
    so that the labeling is canonical under permutations.
    """
    p = corr.p
    if p < 2:
        raise ValueError("need at least two columns to form two clusters")
    if dissimilarity == "profile":
        condensed = pdist(corr.R)
    elif dissimilarity == "one_minus_r":
        dist = 1.0 - corr.R
        np.fill_diagonal(dist, 0.0)
        dist = np.maximum(dist, 0.0)
        condensed = squareform(dist, checks=False)
    else:
        raise ValueError(f"unknown dissimilarity {dissimilarity!r}")
    tree = linkage(condensed, method="complete")
    labels = fcluster(tree, t=2, criterion="maxclust")
    if labels.min() == labels.max():
        # maxclust can return a single cluster when the top merge is tied;
        # force a split at the penultimate merge height instead
        labels = fcluster(tree, t=tree[-1, 2] - 1e-12, criterion="distance")
    if labels[0] != 1:
        labels = 3 - labels
    return labels.astype(np.int64)


MAD_SCALE = 1.4826
CORE_MAD_FACTOR = 3.5
THRESHOLD_FRACTION = 0.4


def adaptive_two_clusters(corr: SampleCorrelation) -> np.ndarray:
    """Split the columns into a small low-correlation group and the bulk.

    Each column's mean correlation with every other column is low for members
    of the small group (their rows of R are mostly cross-group values) and
    high for the bulk.  A robust core of the small group is taken as the
    columns more than ``CORE_MAD_FACTOR`` scaled-MAD below the median of that
    statistic, and the final cut falls ``THRESHOLD_FRACTION`` of the way from
    the core's center to the bulk median.  Thresholding against the recentred
    statistic rather than the raw core keeps the split stable when the core
    is very small.

    Returns labels in {1, 2}; the cluster containing column 0 is labeled 1,
    matching :func:`complete_linkage_two_clusters`.
    """
    p = corr.p
    if p < 2:
        raise ValueError("need at least two columns to form two clusters")
    R = corr.R
    m = (R.sum(axis=1) - 1.0) / (p - 1)
    med = np.median(m)
    mad = MAD_SCALE * np.median(np.abs(m - med))
    core = m < med - CORE_MAD_FACTOR * mad
    if core.sum() < 2:
        core = np.zeros(p, dtype=bool)
        core[np.argsort(m, kind="stable")[:2]] = True
    center = np.median(m[core])
    small = m < center + THRESHOLD_FRACTION * (med - center)
    if small.sum() < 2 or small.sum() > p // 2:
        small = core
    labels = np.where(small, 1, 2).astype(np.int64)
    if labels[0] != 1:
        labels = 3 - labels
    return labels


def block_average(corr: SampleCorrelation, cluster_of: np.ndarray) -> BlockCorrelationModel:
    """Average R within and across the two clusters.

    The cross block uses the plain mean over all pairs; within-cluster blocks
    average only off-diagonal pairs.  A singleton cluster has no off-diagonal
    pair, so its within coefficient is set to 0 (it never appears in the
    expanded matrix) and a warning is logged.
    """
    cluster_of = np.asarray(cluster_of, dtype=np.int64)
    if not np.array_equal(np.unique(cluster_of), np.array([1, 2])):
        raise ValueError("cluster labels must cover exactly {1, 2}")
    R = corr.R
    rho = np.zeros((2, 2))
    sizes = []
    for i in (1, 2):
        idx = np.flatnonzero(cluster_of == i)
        sizes.append(idx.size)
        if idx.size == 1:
            logger.warning("cluster %d is a singleton; within-block rho set to 0", i)
            rho[i - 1, i - 1] = 0.0
        else:
            block = R[np.ix_(idx, idx)]
            k = idx.size
            rho[i - 1, i - 1] = (block.sum() - np.trace(block)) / (k * (k - 1))
    idx1 = np.flatnonzero(cluster_of == 1)
    idx2 = np.flatnonzero(cluster_of == 2)
    cross = R[np.ix_(idx1, idx2)].mean()
    rho[0, 1] = rho[1, 0] = cross
    return BlockCorrelationModel(
        cluster_of=cluster_of, rho=rho, cluster_sizes=(sizes[0], sizes[1])
    )


def expand_block_model(model: BlockCorrelationModel) -> np.ndarray:
    """Expand the two-cluster block model to a full p x p matrix, unit diagonal."""
    labels0 = model.cluster_of - 1
    sigma = model.rho[np.ix_(labels0, labels0)].copy()
    np.fill_diagonal(sigma, 1.0)
    return sigma


def estimate_block_sigma(
    X: np.ndarray, clustering: str = "adaptive", dissimilarity: str = "profile"
) -> tuple[np.ndarray, BlockCorrelationModel]:
    """Full estimation chain: correlation, clustering, averaging, expansion.

    ``clustering`` is ``"adaptive"`` (default) or ``"complete_linkage"``;
    ``dissimilarity`` only applies to the latter.
    """
    corr = sample_correlation(X)
    if clustering == "adaptive":
        labels = adaptive_two_clusters(corr)
    elif clustering == "complete_linkage":
        labels = complete_linkage_two_clusters(corr, dissimilarity=dissimilarity)
    else:
        raise ValueError(f"unknown clustering rule {clustering!r}")
    model = block_average(corr, labels)
    return expand_block_model(model), model
