from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class ToleranceConfig:
    """Every numerical threshold used by the pipeline, in one place.

    ==================  =======  ==============================================
    field               default  meaning
    ==================  =======  ==============================================
    lu_pivot            1e-12    LU pivot below which a Laplacian is singular
    sylvester_pivot     1e-10    relative pivot threshold of Kronecker operator
    regulator           1e-9     residual bound on the regulator equations
    closed_loop         1e-8     residual bound on the closed-loop certificate
    pole                1e-6     char-poly value at a placed pole
    influence           1e-9     row-sum tolerance of an NLI vector
    hull_gap            1e-8     Frank-Wolfe gap (distance scale)
    hull_max_iter       10000    Frank-Wolfe iteration cap
    divergence          1e9      state norm treated as divergence
    containment         5e-2     hull distance bound for containment
    containment_from    15.0     time after which containment is checked
    terminal            1e-2     bound on terminal containment error norm
    ==================  =======  ==============================================
    """

    lu_pivot: float = 1e-12
    sylvester_pivot: float = 1e-10
    regulator: float = 1e-9
    closed_loop: float = 1e-8
    pole: float = 1e-6
    influence: float = 1e-9
    hull_gap: float = 1e-8
    hull_max_iter: int = 10000
    divergence: float = 1e9
    containment: float = 5e-2
    containment_from: float = 15.0
    terminal: float = 1e-2

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown tolerance keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def override(self, **kwargs):
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


DEFAULT_TOLERANCES = ToleranceConfig()
