import os
import csv


def read_something(filename, command, mode="r", **kwargs):
    with open(filename, mode, **kwargs) as f:
        return command(f)


def write_something(filename, command, mode="w", **kwargs):
    with open(filename, mode=mode, **kwargs) as f:
        command(f)


def is_empty_file(filename):
    return not os.path.exists(filename) or os.path.getsize(filename) == 0


def append_csv_row(filename, preamble, fieldnames, row):
    """Append `row` to a CSV file, creating it with `preamble` and a header.

    The file is reopened for every row so that an interrupted run leaves all
    completed rows behind.
    """
    new_file = is_empty_file(filename)

    def dump(f):
        if new_file:
            f.write(preamble + "\n")
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        if new_file:
            writer.writeheader()
        writer.writerow(row)
        f.flush()

    write_something(filename, dump, mode="a", newline="")


def read_csv_rows(filename):
    """Return the preamble line and the rows of a CSV written by `append_csv_row`."""
    def load(f):
        preamble = f.readline().strip()
        return preamble, list(csv.DictReader(f))

    return read_something(filename, load, newline="")


def write_tsv(filename, header, rows):
    def dump(f):
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    write_something(filename, dump, newline="")
