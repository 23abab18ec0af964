#ifndef CSV_LOADER_H
#define CSV_LOADER_H

#include <stddef.h>

/* Parsed feature table of a header-bearing CSV whose last column is the
 * class label.  Label cells are validated for presence but not stored. */
typedef struct {
    double *values; /* row-major, n_rows x n_cols */
    size_t n_rows;
    size_t n_cols; /* feature columns; the label column is excluded */
} csv_table;

/* Load `path` into `out`.  Returns 0 on success.  On failure returns
 * nonzero and writes a message naming the offending row/column (1-based,
 * counting data rows below the header) into errbuf. */
int csv_load(const char *path, csv_table *out, char *errbuf, size_t errlen);

void csv_free(csv_table *t);

#endif
