"""
Statistical models, posterior geometry, data ingestion and exact-posterior oracles.
"""
import csv
import math
from pathlib import Path
from typing import Callable, List, Optional, Tuple
import numpy as np
from scipy import special
from app.config import settings
from app.exceptions import (
    BdmError,
    AccuracyError,
    ConfigError,
    DimensionError,
    DomainError,
    NumericError,
    ParseError,
    SchemaError,
)
from app.models.dataset import Dataset, ModelSpec
from app.models.geometry import PosteriorGeometry
from app.models.results import BdmResult
from app.services.calculus import fd_derivatives, fd_gradient, fd_hessian, integrate_1d, integrate_gh, maximize
from app.utils.helpers import as_vector, cholesky_or_raise
from app.utils.logger import get_logger

logger = get_logger("statmodels")


# ---------------------------------------------------------------------------
# Built-in models
# ---------------------------------------------------------------------------

def _out_of_bounds(theta: np.ndarray, bounds: List[Tuple[float, float]]) -> bool:
    return any(not (lo < v < hi) for v, (lo, hi) in zip(theta, bounds))


def _sufficient_total(data: Dataset) -> float:
    if "t_n" in data.sufficient:
        return float(data.sufficient["t_n"])
    return float(data.observations[:, 0].sum())


def exponential_model(n: int, mle: float, parameterization: str = "theta") -> Tuple[ModelSpec, Dataset]:
    """
    Exponential model with mean theta and Jeffreys prior, given (n, MLE)

    The dataset is synthetic: n observations equal to the MLE, carrying the
    sufficient statistic t_n = n * mle.

    Args:
        n: Sample size (>= 1)
        mle: Maximum likelihood estimate of the mean (> 0)
        parameterization: "theta" for the mean, "log" for phi = log(theta)

    Returns:
        Tuple of (ModelSpec, Dataset)

    Raises:
        DomainError: If mle <= 0 or n < 1
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise DomainError(f"n must be a positive integer, got {n}")
    if not (mle > 0 and math.isfinite(mle)):
        raise DomainError(f"mle must be positive, got {mle}")
    if parameterization not in ("theta", "log"):
        raise DomainError(f"unknown parameterization {parameterization!r}")

    data = Dataset(
        observations=np.full((int(n), 1), float(mle)),
        columns=["y"],
        sufficient={"t_n": float(n) * float(mle)},
    )

    if parameterization == "theta":
        bounds = [(0.0, math.inf)]

        def loglik(theta, d: Dataset) -> float:
            th = float(np.atleast_1d(theta)[0])
            if th <= 0:
                return -math.inf
            return -d.n * math.log(th) - _sufficient_total(d) / th

        def loglik_grad(theta, d: Dataset) -> np.ndarray:
            th = float(np.atleast_1d(theta)[0])
            return np.array([-d.n / th + _sufficient_total(d) / th ** 2])

        def loglik_hess(theta, d: Dataset) -> np.ndarray:
            th = float(np.atleast_1d(theta)[0])
            return np.array([[d.n / th ** 2 - 2.0 * _sufficient_total(d) / th ** 3]])

        def loglik_third(theta, d: Dataset) -> np.ndarray:
            th = float(np.atleast_1d(theta)[0])
            return np.array([[[-2.0 * d.n / th ** 3 + 6.0 * _sufficient_total(d) / th ** 4]]])

        def logprior(theta) -> float:
            th = float(np.atleast_1d(theta)[0])
            return -math.log(th) if th > 0 else -math.inf

        def loglik_batch(thetas, d: Dataset) -> np.ndarray:
            th = np.asarray(thetas, dtype=float)[:, 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                out = -d.n * np.log(th) - _sufficient_total(d) / th
            return np.where(th > 0, out, -np.inf)

        def logprior_batch(thetas) -> np.ndarray:
            th = np.asarray(thetas, dtype=float)[:, 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(th > 0, -np.log(th), -np.inf)

        spec = ModelSpec(
            name="exponential",
            dim=1,
            param_names=["theta"],
            loglik=loglik,
            logprior=logprior,
            loglik_grad=loglik_grad,
            loglik_hess=loglik_hess,
            loglik_third=loglik_third,
            logprior_grad=lambda theta: np.array([-1.0 / float(np.atleast_1d(theta)[0])]),
            logprior_hess=lambda theta: np.array([[1.0 / float(np.atleast_1d(theta)[0]) ** 2]]),
            logprior_third=lambda theta: np.array([[[-2.0 / float(np.atleast_1d(theta)[0]) ** 3]]]),
            expected_info=lambda theta, d: np.array([[d.n / float(np.atleast_1d(theta)[0]) ** 2]]),
            loglik_batch=loglik_batch,
            logprior_batch=logprior_batch,
            initial=lambda d: np.array([_sufficient_total(d) / d.n]),
            bounds=bounds,
        )
    else:
        def loglik(phi, d: Dataset) -> float:
            p = float(np.atleast_1d(phi)[0])
            return -d.n * p - _sufficient_total(d) * math.exp(-p)

        def loglik_grad(phi, d: Dataset) -> np.ndarray:
            p = float(np.atleast_1d(phi)[0])
            return np.array([-d.n + _sufficient_total(d) * math.exp(-p)])

        def loglik_hess(phi, d: Dataset) -> np.ndarray:
            p = float(np.atleast_1d(phi)[0])
            return np.array([[-_sufficient_total(d) * math.exp(-p)]])

        def loglik_third(phi, d: Dataset) -> np.ndarray:
            p = float(np.atleast_1d(phi)[0])
            return np.array([[[_sufficient_total(d) * math.exp(-p)]]])

        def loglik_batch(phis, d: Dataset) -> np.ndarray:
            p = np.asarray(phis, dtype=float)[:, 0]
            return -d.n * p - _sufficient_total(d) * np.exp(-p)

        # Jeffreys prior is flat in log(theta)
        spec = ModelSpec(
            name="exponential-log",
            dim=1,
            param_names=["log_theta"],
            loglik=loglik,
            logprior=lambda phi: 0.0,
            loglik_grad=loglik_grad,
            loglik_hess=loglik_hess,
            loglik_third=loglik_third,
            logprior_grad=lambda phi: np.zeros(1),
            logprior_hess=lambda phi: np.zeros((1, 1)),
            logprior_third=lambda phi: np.zeros((1, 1, 1)),
            expected_info=lambda phi, d: np.array([[float(d.n)]]),
            loglik_batch=loglik_batch,
            logprior_batch=lambda phis: np.zeros(np.asarray(phis).shape[0]),
            initial=lambda d: np.array([math.log(_sufficient_total(d) / d.n)]),
            bounds=[(-math.inf, math.inf)],
        )

    logger.debug(f"Built {spec.name} model with n={n}, t_n={data.sufficient['t_n']}")
    return spec, data


def exponential_model_from_data(y, parameterization: str = "theta") -> Tuple[ModelSpec, Dataset]:
    """
    Exponential model from raw positive observations

    Args:
        y: Positive observations
        parameterization: "theta" or "log"

    Returns:
        Tuple of (ModelSpec, Dataset)
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 1:
        raise SchemaError("at least one observation is required")
    if np.any(y <= 0):
        raise DomainError("exponential observations must be positive")
    return exponential_model(int(y.size), float(y.mean()), parameterization)


def _design(data: Dataset, add_intercept: bool) -> np.ndarray:
    X = np.asarray(data.observations, dtype=float)
    if add_intercept:
        X = np.column_stack([np.ones(X.shape[0]), X])
    return X


def logistic_model(data: Dataset, prior_sd: Optional[float] = None, flat_prior: bool = False, add_intercept: bool = True) -> ModelSpec:
    """
    Bernoulli regression with logit link and independent normal priors

    Args:
        data: Dataset with a binary response
        prior_sd: Prior standard deviation (default from settings, 5)
        flat_prior: Use an improper flat prior instead
        add_intercept: Prepend an intercept column to the covariates

    Returns:
        ModelSpec

    Raises:
        SchemaError: If the response is missing or not binary
    """
    if data.response is None:
        raise SchemaError("logistic model requires a response column 'y'")
    y = np.asarray(data.response, dtype=float)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise SchemaError("logistic response must take values in {0, 1}")
    sd = settings.PRIOR_SD if prior_sd is None else float(prior_sd)
    if not flat_prior and not sd > 0:
        raise DomainError(f"prior_sd must be positive, got {sd}")

    X0 = _design(data, add_intercept)
    dim = X0.shape[1]
    names = [f"beta{i}" for i in range(dim)]

    def loglik(beta, d: Dataset) -> float:
        X = _design(d, add_intercept)
        eta = X @ np.asarray(beta, dtype=float)
        return float(d.response @ eta - np.logaddexp(0.0, eta).sum())

    def loglik_grad(beta, d: Dataset) -> np.ndarray:
        X = _design(d, add_intercept)
        mu = special.expit(X @ np.asarray(beta, dtype=float))
        return X.T @ (d.response - mu)

    def loglik_hess(beta, d: Dataset) -> np.ndarray:
        X = _design(d, add_intercept)
        mu = special.expit(X @ np.asarray(beta, dtype=float))
        return -(X.T * (mu * (1.0 - mu))) @ X

    def loglik_third(beta, d: Dataset) -> np.ndarray:
        X = _design(d, add_intercept)
        mu = special.expit(X @ np.asarray(beta, dtype=float))
        w = mu * (1.0 - mu) * (1.0 - 2.0 * mu)
        return -np.einsum("i,ia,ib,ic->abc", w, X, X, X)

    def loglik_batch(betas, d: Dataset) -> np.ndarray:
        X = _design(d, add_intercept)
        eta = np.asarray(betas, dtype=float) @ X.T
        return eta @ d.response - np.logaddexp(0.0, eta).sum(axis=1)

    if flat_prior:
        prior = dict(
            logprior=lambda beta: 0.0,
            logprior_grad=lambda beta: np.zeros(dim),
            logprior_hess=lambda beta: np.zeros((dim, dim)),
            logprior_batch=lambda betas: np.zeros(np.asarray(betas).shape[0]),
        )
    else:
        log_norm = -dim * math.log(sd * math.sqrt(2.0 * math.pi))
        prior = dict(
            logprior=lambda beta: float(log_norm - 0.5 * np.sum(np.asarray(beta) ** 2) / sd ** 2),
            logprior_grad=lambda beta: -np.asarray(beta, dtype=float) / sd ** 2,
            logprior_hess=lambda beta: -np.eye(dim) / sd ** 2,
            logprior_batch=lambda betas: log_norm - 0.5 * np.sum(np.asarray(betas) ** 2, axis=1) / sd ** 2,
        )

    return ModelSpec(
        name="logistic",
        dim=dim,
        param_names=names,
        loglik=loglik,
        loglik_grad=loglik_grad,
        loglik_hess=loglik_hess,
        loglik_third=loglik_third,
        logprior_third=lambda beta: np.zeros((dim, dim, dim)),
        expected_info=lambda beta, d: -loglik_hess(beta, d),
        loglik_batch=loglik_batch,
        initial=lambda d: np.zeros(dim),
        **prior,
    )


def normal_model(y, sigma: Optional[float] = None) -> Tuple[ModelSpec, Dataset]:
    """
    Normal model with flat prior

    With sigma given the parameter is the mean alone; otherwise it is
    (mu, log sigma).

    Args:
        y: Observations
        sigma: Known standard deviation, if any

    Returns:
        Tuple of (ModelSpec, Dataset)
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 2:
        raise SchemaError("normal model requires at least two observations")
    data = Dataset(observations=y.reshape(-1, 1), columns=["y"])

    if sigma is not None:
        s2 = float(sigma) ** 2
        return ModelSpec(
            name="normal-mean",
            dim=1,
            param_names=["mu"],
            loglik=lambda mu, d: float(-0.5 * np.sum((d.observations[:, 0] - np.atleast_1d(mu)[0]) ** 2) / s2),
            logprior=lambda mu: 0.0,
            loglik_grad=lambda mu, d: np.array([np.sum(d.observations[:, 0] - np.atleast_1d(mu)[0]) / s2]),
            loglik_hess=lambda mu, d: np.array([[-d.n / s2]]),
            loglik_third=lambda mu, d: np.zeros((1, 1, 1)),
            logprior_grad=lambda mu: np.zeros(1),
            logprior_hess=lambda mu: np.zeros((1, 1)),
            logprior_third=lambda mu: np.zeros((1, 1, 1)),
            expected_info=lambda mu, d: np.array([[d.n / s2]]),
            initial=lambda d: np.array([d.observations[:, 0].mean()]),
        ), data

    def parts(theta, d: Dataset):
        mu, tau = float(theta[0]), float(theta[1])
        r = d.observations[:, 0] - mu
        return r.sum(), float(r @ r), math.exp(-2.0 * tau), tau

    def loglik(theta, d: Dataset) -> float:
        _, S, e, tau = parts(theta, d)
        return -d.n * tau - 0.5 * S * e

    def loglik_grad(theta, d: Dataset) -> np.ndarray:
        A, S, e, _ = parts(theta, d)
        return np.array([A * e, -d.n + S * e])

    def loglik_hess(theta, d: Dataset) -> np.ndarray:
        A, S, e, _ = parts(theta, d)
        return np.array([[-d.n * e, -2.0 * A * e], [-2.0 * A * e, -2.0 * S * e]])

    def loglik_third(theta, d: Dataset) -> np.ndarray:
        A, S, e, _ = parts(theta, d)
        T = np.zeros((2, 2, 2))
        T[0, 0, 1] = T[0, 1, 0] = T[1, 0, 0] = 2.0 * d.n * e
        T[0, 1, 1] = T[1, 0, 1] = T[1, 1, 0] = 4.0 * A * e
        T[1, 1, 1] = 4.0 * S * e
        return T

    def loglik_batch(thetas, d: Dataset) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        r = d.observations[:, 0][None, :] - thetas[:, :1]
        return -d.n * thetas[:, 1] - 0.5 * np.sum(r * r, axis=1) * np.exp(-2.0 * thetas[:, 1])

    return ModelSpec(
        name="normal",
        dim=2,
        param_names=["mu", "log_sigma"],
        loglik=loglik,
        logprior=lambda theta: 0.0,
        loglik_grad=loglik_grad,
        loglik_hess=loglik_hess,
        loglik_third=loglik_third,
        logprior_grad=lambda theta: np.zeros(2),
        logprior_hess=lambda theta: np.zeros((2, 2)),
        logprior_third=lambda theta: np.zeros((2, 2, 2)),
        expected_info=lambda theta, d: np.diag([d.n * math.exp(-2.0 * float(theta[1])), 2.0 * d.n]),
        loglik_batch=loglik_batch,
        logprior_batch=lambda thetas: np.zeros(np.asarray(thetas).shape[0]),
        initial=lambda d: np.array([d.observations[:, 0].mean(), math.log(d.observations[:, 0].std())]),
    ), data


# ---------------------------------------------------------------------------
# Derivative dispatch: analytic when registered, finite differences otherwise
# ---------------------------------------------------------------------------

def log_posterior(model: ModelSpec, data: Dataset, theta) -> float:
    """Unnormalized log-posterior l(theta) + log pi(theta)"""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if model.bounds and _out_of_bounds(theta, model.bounds):
        return -math.inf
    return float(model.loglik(theta, data)) + float(model.logprior(theta))


def log_posterior_batch(model: ModelSpec, data: Dataset, thetas: np.ndarray) -> np.ndarray:
    """Unnormalized log-posterior on an (m, d) batch"""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if model.loglik_batch is not None:
        lik = np.asarray(model.loglik_batch(thetas, data), dtype=float)
    else:
        lik = np.array([float(model.loglik(t, data)) for t in thetas])
    if model.logprior_batch is not None:
        prior = np.asarray(model.logprior_batch(thetas), dtype=float)
    else:
        prior = np.array([float(model.logprior(t)) for t in thetas])
    return lik + prior


def loglik_gradient(model: ModelSpec, data: Dataset, theta) -> np.ndarray:
    theta = as_vector(theta, "theta")
    if model.loglik_grad is not None:
        return np.asarray(model.loglik_grad(theta, data), dtype=float).reshape(-1)
    return fd_gradient(lambda t: model.loglik(t, data), theta)


def loglik_hessian(model: ModelSpec, data: Dataset, theta) -> np.ndarray:
    theta = as_vector(theta, "theta")
    if model.loglik_hess is not None:
        return np.atleast_2d(np.asarray(model.loglik_hess(theta, data), dtype=float))
    return fd_hessian(lambda t: model.loglik(t, data), theta)


def loglik_third(model: ModelSpec, data: Dataset, theta) -> Tuple[np.ndarray, bool]:
    """Third-derivative tensor of l and whether mixed entries are populated"""
    theta = as_vector(theta, "theta")
    if model.loglik_third is not None:
        return np.asarray(model.loglik_third(theta, data), dtype=float), True
    return _fd_third(lambda t: model.loglik(t, data), theta)


def _fd_third(f: Callable, theta: np.ndarray) -> Tuple[np.ndarray, bool]:
    d = theta.size
    full = d <= settings.GH_MAX_DIM
    report = fd_derivatives(f, theta, order=3, want_full_tensor=full)
    if full:
        return np.asarray(report.third_full), True
    tensor = np.zeros((d, d, d))
    tensor[np.arange(d), np.arange(d), np.arange(d)] = report.third_unmixed
    return tensor, False


def _prior_derivative(model: ModelSpec, theta: np.ndarray, order: int) -> np.ndarray:
    analytic = {1: model.logprior_grad, 2: model.logprior_hess, 3: model.logprior_third}[order]
    if analytic is not None:
        return np.asarray(analytic(theta), dtype=float)
    if order == 1:
        return fd_gradient(model.logprior, theta)
    if order == 2:
        return fd_hessian(model.logprior, theta)
    return _fd_third(model.logprior, theta)[0]


def logpost_gradient(model: ModelSpec, data: Dataset, theta) -> np.ndarray:
    theta = as_vector(theta, "theta")
    return loglik_gradient(model, data, theta) + _prior_derivative(model, theta, 1).reshape(-1)


def logpost_hessian(model: ModelSpec, data: Dataset, theta) -> np.ndarray:
    theta = as_vector(theta, "theta")
    return loglik_hessian(model, data, theta) + np.atleast_2d(_prior_derivative(model, theta, 2))


def logpost_third(model: ModelSpec, data: Dataset, theta) -> Tuple[np.ndarray, bool]:
    theta = as_vector(theta, "theta")
    lik, complete = loglik_third(model, data, theta)
    return lik + _prior_derivative(model, theta, 3).reshape(lik.shape), complete


def expected_information(model: ModelSpec, data: Dataset, theta) -> Tuple[np.ndarray, bool]:
    """Expected information, or observed information with a fallback flag"""
    theta = as_vector(theta, "theta")
    if model.expected_info is not None:
        return np.atleast_2d(np.asarray(model.expected_info(theta, data), dtype=float)), False
    logger.warning(f"Model {model.name} has no expected information; using observed information")
    return -loglik_hessian(model, data, theta), True


# ---------------------------------------------------------------------------
# Posterior geometry
# ---------------------------------------------------------------------------

def fit_geometry(model: ModelSpec, data: Dataset) -> PosteriorGeometry:
    """
    Locate MLE and MAP and collect the local information at both

    Args:
        model: Model specification
        data: Dataset

    Returns:
        PosteriorGeometry

    Raises:
        ConvergenceError: If either maximization fails
        SingularInformationError: If an information matrix is not positive definite
    """
    x0 = model.initial(data) if model.initial is not None else np.zeros(model.dim)
    x0 = as_vector(x0, "initial point")
    if x0.size != model.dim:
        raise DimensionError(f"initial point has {x0.size} entries, model dimension is {model.dim}")

    try:
        mle = maximize(
            lambda t: log_posterior_free(model, data, t, include_prior=False),
            x0,
            grad=lambda t: loglik_gradient(model, data, t),
            hess=lambda t: loglik_hessian(model, data, t),
        )
        map_point = maximize(
            lambda t: log_posterior(model, data, t),
            mle,
            grad=lambda t: logpost_gradient(model, data, t),
            hess=lambda t: logpost_hessian(model, data, t),
        )
    except BdmError:
        raise
    except Exception as e:
        logger.error(f"Failed to fit geometry for {model.name}: {e}")
        raise NumericError(f"Failed to fit geometry for {model.name}: {e}") from e

    obs_info_mle = -loglik_hessian(model, data, mle)
    obs_info_map = -loglik_hessian(model, data, map_point)
    post_info_map = -logpost_hessian(model, data, map_point)
    cholesky_or_raise(obs_info_mle, "observed information at the MLE")
    cholesky_or_raise(obs_info_map, "observed information at the MAP")
    cholesky_or_raise(post_info_map, "posterior information at the MAP")

    third_post, complete = logpost_third(model, data, map_point)
    third_lik, _ = loglik_third(model, data, map_point)

    geometry = PosteriorGeometry(
        family=model.name,
        map_point=map_point,
        mle=mle,
        obs_info_mle=obs_info_mle,
        obs_info_map=obs_info_map,
        post_info_map=post_info_map,
        third_at_map=third_post,
        third_lik_at_map=third_lik,
        loglik_at_mle=float(model.loglik(mle, data)),
        third_complete=complete,
        n=data.n,
    )
    logger.info(f"Fitted {model.name}: MLE={mle.tolist()}, MAP={map_point.tolist()}")
    return geometry


def log_posterior_free(model: ModelSpec, data: Dataset, theta, include_prior: bool = True) -> float:
    """Log-likelihood (optionally plus log-prior) with -inf outside the domain"""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if model.bounds and _out_of_bounds(theta, model.bounds):
        return -math.inf
    value = float(model.loglik(theta, data))
    if include_prior:
        value += float(model.logprior(theta))
    return value


# ---------------------------------------------------------------------------
# Data ingestion
# ---------------------------------------------------------------------------

def load_csv(path: str) -> Dataset:
    """
    Load a numeric CSV file with a header row

    A column literally named `y` becomes the response; every other column is
    a covariate, in file order.

    Args:
        path: File path

    Returns:
        Dataset

    Raises:
        ParseError: On ragged rows or non-numeric cells
        SchemaError: If the file has no data rows
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigError(f"data file not found: {path}")

    rows: List[List[float]] = []
    with open(file_path, newline="", encoding="utf-8-sig") as handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path} is empty")
        if len(set(header)) != len(header):
            raise ParseError("duplicate column names", line=1)
        for line_number, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} cells, found {len(row)}", line=line_number)
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as e:
                raise ParseError(f"non-numeric cell ({e})", line=line_number) from e

    if not rows:
        raise SchemaError(f"{path} has no data rows (n >= 1 required)")

    table = np.array(rows, dtype=float)
    if not np.all(np.isfinite(table)):
        raise SchemaError(f"{path} contains non-finite values")

    response = None
    covariates = list(range(len(header)))
    if "y" in header:
        index = header.index("y")
        response = table[:, index]
        covariates.remove(index)

    logger.info(f"Loaded {len(rows)} rows from {path}")
    return Dataset(
        observations=table[:, covariates] if covariates else np.zeros((len(rows), 0)),
        response=response,
        columns=[header[i] for i in covariates],
    )


# ---------------------------------------------------------------------------
# Exact oracles
# ---------------------------------------------------------------------------

def exact_cdf_exponential(n: int, mle: float, theta) -> float:
    """P(theta <= theta0 | y) for the exponential model with Jeffreys prior (inverse gamma posterior)"""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise DomainError(f"theta0 must be positive, got {theta.tolist()}")
    value = special.gammaincc(n, n * mle / theta)
    return float(value) if value.ndim == 0 else value


def exact_density_exponential(n: int, mle: float, theta) -> np.ndarray:
    """Inverse gamma posterior density with shape n and scale t_n"""
    theta = np.asarray(theta, dtype=float)
    t = n * mle
    with np.errstate(divide="ignore", invalid="ignore"):
        log_density = n * math.log(t) - special.gammaln(n) - (n + 1) * np.log(theta) - t / theta
    return np.where(theta > 0, np.exp(log_density), 0.0)


def exact_quantile_exponential(n: int, mle: float, p: float) -> float:
    """Posterior quantile of the exponential mean"""
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must be in (0, 1), got {p}")
    return float(n * mle / special.gammainccinv(n, p))


def exact_bdm_exponential(n: int, mle: float, theta0: float) -> BdmResult:
    """
    Exact discrepancy measure for the exponential model

    Args:
        n: Sample size
        mle: Maximum likelihood estimate
        theta0: Hypothesized mean (> 0)

    Returns:
        BdmResult with method "exact"
    """
    if not theta0 > 0:
        raise DomainError(f"theta0 must be positive, got {theta0}")
    tail_low = exact_cdf_exponential(n, mle, theta0)
    return BdmResult.from_tail("exact", theta0, tail_low, {"median": exact_quantile_exponential(n, mle, 0.5)})


class MarginalQuadrature:
    """
    Quadrature oracle for the marginal posterior of one coordinate

    The nuisance coordinates are integrated by Gauss-Hermite around the
    Gaussian conditional of the Laplace approximation; the remaining 1-D
    integral over psi is adaptive.
    """

    def __init__(self, model: ModelSpec, data: Dataset, psi_index: int, geom: Optional[PosteriorGeometry] = None, nodes: Optional[int] = None):
        if model.dim > settings.GH_MAX_DIM:
            raise DimensionError(f"quadrature oracle supports d <= {settings.GH_MAX_DIM}, got {model.dim}")
        if not 0 <= psi_index < model.dim:
            raise DomainError(f"psi_index {psi_index} out of range for d = {model.dim}")
        self.model = model
        self.data = data
        self.psi_index = psi_index
        self.geom = geom or fit_geometry(model, data)
        self.nodes = nodes or settings.GH_NODES
        self.mode = np.asarray(self.geom.map_point)
        self.log_peak = log_posterior(model, data, self.mode)

        covariance = np.linalg.inv(self.geom.post_info_map)
        self.others = [i for i in range(model.dim) if i != psi_index]
        self.psi_mode = float(self.mode[psi_index])
        self.psi_sd = math.sqrt(covariance[psi_index, psi_index])
        if self.others:
            cov_lp = covariance[np.ix_(self.others, [psi_index])][:, 0]
            self.slope = cov_lp / covariance[psi_index, psi_index]
            self.cond_cov = covariance[np.ix_(self.others, self.others)] - np.outer(cov_lp, cov_lp) / covariance[psi_index, psi_index]
            self.cond_chol = cholesky_or_raise(self.cond_cov, "conditional covariance")
            self.cond_logdet = 2.0 * float(np.sum(np.log(np.diag(self.cond_chol))))
        self._normalizer = {}

    def unnormalized(self, psi: float, nodes: Optional[int] = None) -> float:
        """Marginal posterior density at psi up to the normalizing constant"""
        nodes = nodes or self.nodes
        if not self.others:
            return math.exp(log_posterior(self.model, self.data, [psi]) - self.log_peak)

        mean = self.mode[self.others] + self.slope * (psi - self.psi_mode)
        k = len(self.others)

        def integrand(lam: np.ndarray) -> np.ndarray:
            thetas = np.empty((lam.shape[0], self.model.dim))
            thetas[:, self.psi_index] = psi
            thetas[:, self.others] = lam
            log_post = log_posterior_batch(self.model, self.data, thetas) - self.log_peak
            z = np.linalg.solve(self.cond_chol, (lam - mean).T)
            log_normal = -0.5 * np.sum(z * z, axis=0) - 0.5 * k * math.log(2.0 * math.pi) - 0.5 * self.cond_logdet
            return np.exp(log_post - log_normal)

        return integrate_gh(integrand, mean, self.cond_cov, nodes)

    def _limits(self) -> Tuple[float, float]:
        return self.model.coordinate_bounds(self.psi_index)

    def normalizer(self, nodes: Optional[int] = None) -> float:
        nodes = nodes or self.nodes
        if nodes not in self._normalizer:
            lo, hi = self._limits()
            total = integrate_1d(lambda s: self.unnormalized(s, nodes), lo, hi, tol=1e-12 * self.psi_sd, center=self.psi_mode)
            if not total > 0:
                raise NumericError("marginal posterior normalizer is not positive")
            self._normalizer[nodes] = total
        return self._normalizer[nodes]

    def cdf(self, psi0: float, nodes: Optional[int] = None) -> float:
        """P(psi <= psi0 | y)"""
        nodes = nodes or self.nodes
        lo, hi = self._limits()
        if psi0 <= lo:
            return 0.0
        if psi0 >= hi:
            return 1.0
        total = self.normalizer(nodes)
        if psi0 <= self.psi_mode:
            mass = integrate_1d(lambda s: self.unnormalized(s, nodes), lo, psi0, tol=1e-12 * self.psi_sd, center=self.psi_mode)
            return min(max(mass / total, 0.0), 1.0)
        upper = integrate_1d(lambda s: self.unnormalized(s, nodes), psi0, hi, tol=1e-12 * self.psi_sd, center=self.psi_mode)
        return min(max(1.0 - upper / total, 0.0), 1.0)

    def density(self, psi) -> np.ndarray:
        """Normalized marginal posterior density on a grid"""
        total = self.normalizer()
        return np.array([self.unnormalized(float(s)) / total for s in np.atleast_1d(psi)])


def exact_marginal_bdm_quadrature(
    model: ModelSpec,
    data: Dataset,
    psi_index: int,
    psi0: float,
    geom: Optional[PosteriorGeometry] = None,
    nodes: Optional[int] = None,
) -> BdmResult:
    """
    Quadrature oracle for the marginal discrepancy measure of one coordinate

    The error estimate is the change in the tail when the Gauss-Hermite node
    count is halved.

    Args:
        model: Model specification (d <= 3)
        data: Dataset
        psi_index: Coordinate of interest
        psi0: Hypothesized value
        geom: Pre-fitted geometry
        nodes: Gauss-Hermite nodes per axis

    Returns:
        BdmResult with method "exact"

    Raises:
        DimensionError: If d > 3
        AccuracyError: If the error estimate exceeds the configured limit
    """
    oracle = MarginalQuadrature(model, data, psi_index, geom, nodes)
    tail = oracle.cdf(psi0)
    if oracle.others:
        coarse = oracle.cdf(psi0, nodes=max(oracle.nodes // 2, 8))
        error = abs(tail - coarse)
    else:
        error = 0.0
    if error > settings.MARGINAL_QUAD_ERROR_LIMIT:
        logger.error(f"Failed to reach quadrature accuracy: error estimate {error:.2e}")
        raise AccuracyError("marginal quadrature error estimate above limit", tail, error)
    return BdmResult.from_tail(
        "exact",
        psi0,
        tail,
        {"error_estimate": error, "nodes": oracle.nodes, "psi_index": psi_index},
    )
