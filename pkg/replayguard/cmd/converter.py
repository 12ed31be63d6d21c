__all__ = ("Converter", "CommaList")


class Converter:
    """
    Base of converters that need more than a callable(str)
    """

    @classmethod
    def convert(cls, parameter, arg):
        raise NotImplementedError


class CommaList(Converter):
    item = str

    @classmethod
    def convert(cls, parameter, arg):
        return tuple(cls.item(part.strip()) for part in arg.split(",") if part.strip())