import logging

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def add_logfile_argument(parser):
    parser.add_argument("--logfile", type=str, default=None, help="Also write log records to this file")


def attach_logfile(path: str | None) -> logging.Handler | None:
    """Mirror the ``diversity`` logger into ``path``; returns the handler to detach later."""
    if not path:
        return None
    handler = logging.FileHandler(path, encoding="utf-8")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.getLogger("diversity").addHandler(handler)
    return handler


def detach_logfile(handler: logging.Handler | None) -> None:
    if handler is not None:
        logging.getLogger("diversity").removeHandler(handler)
        handler.close()
