/* Minimal CSV reader for benchmark drivers.
 *
 * Accepts the shared tabular format: UTF-8, comma-separated, first row a
 * header, every non-label cell a finite decimal number, label column last.
 * Blank lines are skipped.  Rejects ragged rows, empty cells, non-numeric
 * or non-finite values, and files without data rows, naming the offending
 * row and column.
 */
#define _POSIX_C_SOURCE 200809L

#include "csv_loader.h"

#include <ctype.h>
#include <math.h>
#include <stdarg.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static void fail(char *errbuf, size_t errlen, const char *fmt, ...)
{
    va_list ap;
    if (errbuf == NULL || errlen == 0) {
        return;
    }
    va_start(ap, fmt);
    vsnprintf(errbuf, errlen, fmt, ap);
    va_end(ap);
}

static size_t count_columns(const char *line)
{
    size_t n = 1;
    const char *p;
    for (p = line; *p != '\0'; p++) {
        if (*p == ',') {
            n++;
        }
    }
    return n;
}

static void strip_eol(char *line)
{
    size_t len = strlen(line);
    while (len > 0 && (line[len - 1] == '\n' || line[len - 1] == '\r')) {
        line[--len] = '\0';
    }
}

static int is_blank(const char *line)
{
    const char *p;
    for (p = line; *p != '\0'; p++) {
        if (!isspace((unsigned char)*p)) {
            return 0;
        }
    }
    return 1;
}

/* Parse one feature cell (NUL-terminated, possibly space-padded) into a
 * finite double.  Returns 0 on success. */
static int parse_cell(const char *cell, double *out)
{
    const char *start = cell;
    char *end = NULL;
    double value;
    while (isspace((unsigned char)*start)) {
        start++;
    }
    if (*start == '\0') {
        return -1;
    }
    value = strtod(start, &end);
    while (end != NULL && isspace((unsigned char)*end)) {
        end++;
    }
    if (end == NULL || *end != '\0' || !isfinite(value)) {
        return -1;
    }
    *out = value;
    return 0;
}

int csv_load(const char *path, csv_table *out, char *errbuf, size_t errlen)
{
    FILE *fp;
    char *line = NULL;
    size_t cap = 0;
    ssize_t got;
    size_t n_total = 0; /* columns including the label */
    size_t n_rows = 0;
    size_t row_cap = 0;
    size_t lineno = 0; /* data rows seen, 1-based */
    double *values = NULL;

    out->values = NULL;
    out->n_rows = 0;
    out->n_cols = 0;

    fp = fopen(path, "r");
    if (fp == NULL) {
        fail(errbuf, errlen, "cannot open %s", path);
        return -1;
    }

    /* Header row fixes the column count. */
    for (;;) {
        got = getline(&line, &cap, fp);
        if (got < 0) {
            fail(errbuf, errlen, "%s: missing header row", path);
            goto error;
        }
        strip_eol(line);
        if (!is_blank(line)) {
            break;
        }
    }
    n_total = count_columns(line);
    if (n_total < 2) {
        fail(errbuf, errlen, "%s: header needs at least one feature and the label column", path);
        goto error;
    }

    while ((got = getline(&line, &cap, fp)) >= 0) {
        char *cursor;
        size_t col;

        strip_eol(line);
        if (is_blank(line)) {
            continue;
        }
        lineno++;
        if (count_columns(line) != n_total) {
            fail(errbuf, errlen, "%s: row %zu has %zu cells, expected %zu",
                 path, lineno, count_columns(line), n_total);
            goto error;
        }
        if (n_rows == row_cap) {
            double *grown;
            row_cap = row_cap == 0 ? 64 : row_cap * 2;
            grown = realloc(values, row_cap * (n_total - 1) * sizeof *grown);
            if (grown == NULL) {
                fail(errbuf, errlen, "out of memory at row %zu", lineno);
                goto error;
            }
            values = grown;
        }

        cursor = line;
        for (col = 0; col < n_total; col++) {
            char *comma = strchr(cursor, ',');
            if (comma != NULL) {
                *comma = '\0';
            }
            if (col < n_total - 1) {
                if (parse_cell(cursor, &values[n_rows * (n_total - 1) + col]) != 0) {
                    fail(errbuf, errlen, "%s: row %zu, column %zu: bad numeric value \"%s\"",
                         path, lineno, col + 1, cursor);
                    goto error;
                }
            } else {
                const char *p = cursor;
                while (isspace((unsigned char)*p)) {
                    p++;
                }
                if (*p == '\0') {
                    fail(errbuf, errlen, "%s: row %zu, column %zu: empty label",
                         path, lineno, col + 1);
                    goto error;
                }
            }
            cursor = comma == NULL ? cursor + strlen(cursor) : comma + 1;
        }
        n_rows++;
    }
    if (ferror(fp)) {
        fail(errbuf, errlen, "%s: read error", path);
        goto error;
    }
    if (n_rows == 0) {
        fail(errbuf, errlen, "%s: no data rows", path);
        goto error;
    }

    free(line);
    fclose(fp);
    out->values = values;
    out->n_rows = n_rows;
    out->n_cols = n_total - 1;
    return 0;

error:
    free(line);
    free(values);
    fclose(fp);
    return -1;
}

void csv_free(csv_table *t)
{
    free(t->values);
    t->values = NULL;
    t->n_rows = 0;
    t->n_cols = 0;
}
