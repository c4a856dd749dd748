"""Exception hierarchy. Every error raised on purpose derives from SparseGeomError."""


class SparseGeomError(ValueError):
    pass


class DegenerateBase(SparseGeomError):
    pass


class DegenerateAux(SparseGeomError):
    pass


class DegenerateSimplex(SparseGeomError):
    pass


class OnFlat(SparseGeomError):
    pass


class NotRealizable(SparseGeomError):
    pass


class OutOfRange(SparseGeomError):
    pass


class EmptySet(SparseGeomError):
    pass


class DimensionMismatch(SparseGeomError):
    pass


class NonUniformInput(SparseGeomError):
    pass


class IndexOutOfRange(SparseGeomError, IndexError):
    pass


class EmptySlice(SparseGeomError):
    pass


class TooFewPoints(SparseGeomError):
    pass


class InstanceTooLarge(SparseGeomError):
    pass


class QueryOutsidePrism(SparseGeomError):
    pass


class NotVerticallyAligned(SparseGeomError):
    pass


class CoincidentWithQuery(SparseGeomError):
    pass


class DimensionNot4(SparseGeomError):
    pass


class ParseError(SparseGeomError):
    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.row = row
        self.column = column


class ConfigError(SparseGeomError):
    pass
