/* Anchor substitution for the driver scaffold.
 *
 * usage: instantiate TEMPLATE NAME=VALUE...
 *
 * Replaces every @NAME@ token in TEMPLATE with VALUE and writes the result
 * to stdout.  Substitution is purely textual.  A binding whose token never
 * occurs in the template is an error, and so is any @NAME@ token left over
 * once all bindings are applied; both name the anchor on stderr.
 *
 * Exit codes: 0 success, 1 unknown or unbound anchor, 2 usage or I/O error.
 */
#include <ctype.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static char *read_file(const char *path)
{
    FILE *fp = fopen(path, "rb");
    long size;
    char *text;

    if (fp == NULL) {
        fprintf(stderr, "instantiate: cannot open %s\n", path);
        return NULL;
    }
    if (fseek(fp, 0, SEEK_END) != 0 || (size = ftell(fp)) < 0) {
        fprintf(stderr, "instantiate: cannot size %s\n", path);
        fclose(fp);
        return NULL;
    }
    rewind(fp);
    text = malloc((size_t)size + 1);
    if (text == NULL) {
        fprintf(stderr, "instantiate: out of memory\n");
        fclose(fp);
        return NULL;
    }
    if (fread(text, 1, (size_t)size, fp) != (size_t)size) {
        fprintf(stderr, "instantiate: cannot read %s\n", path);
        free(text);
        fclose(fp);
        return NULL;
    }
    fclose(fp);
    text[size] = '\0';
    return text;
}

/* Replace every occurrence of token with value; returns a fresh buffer and
 * stores the occurrence count.  Returns NULL with count 0 when the token is
 * absent. */
static char *replace_all(const char *text, const char *token,
                         const char *value, size_t *count)
{
    size_t tok_len = strlen(token);
    size_t val_len = strlen(value);
    size_t n = 0;
    const char *p = text;
    char *out;
    char *w;

    while ((p = strstr(p, token)) != NULL) {
        n++;
        p += tok_len;
    }
    *count = n;
    if (n == 0) {
        return NULL;
    }
    out = malloc(strlen(text) - n * tok_len + n * val_len + 1);
    if (out == NULL) {
        return NULL;
    }
    w = out;
    p = text;
    for (;;) {
        const char *hit = strstr(p, token);
        if (hit == NULL) {
            strcpy(w, p);
            break;
        }
        memcpy(w, p, (size_t)(hit - p));
        w += hit - p;
        memcpy(w, value, val_len);
        w += val_len;
        p = hit + tok_len;
    }
    return out;
}

static int is_anchor_char(char c)
{
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

/* Find the first remaining @NAME@ token, if any. */
static const char *find_unbound(const char *text, size_t *name_len)
{
    const char *p = text;
    while ((p = strchr(p, '@')) != NULL) {
        const char *q = p + 1;
        while (is_anchor_char(*q)) {
            q++;
        }
        if (q > p + 1 && *q == '@') {
            *name_len = (size_t)(q - p - 1);
            return p + 1;
        }
        p++;
    }
    return NULL;
}

int main(int argc, char **argv)
{
    char *text;
    const char *leftover;
    size_t name_len;
    int i;

    if (argc < 3) {
        fprintf(stderr, "usage: %s TEMPLATE NAME=VALUE...\n", argv[0]);
        return 2;
    }
    text = read_file(argv[1]);
    if (text == NULL) {
        return 2;
    }

    for (i = 2; i < argc; i++) {
        const char *eq = strchr(argv[i], '=');
        char token[128];
        size_t count;
        char *next;

        if (eq == NULL || eq == argv[i]) {
            fprintf(stderr, "instantiate: binding %s is not NAME=VALUE\n", argv[i]);
            free(text);
            return 2;
        }
        if ((size_t)(eq - argv[i]) > sizeof token - 3) {
            fprintf(stderr, "instantiate: anchor name too long in %s\n", argv[i]);
            free(text);
            return 2;
        }
        snprintf(token, sizeof token, "@%.*s@", (int)(eq - argv[i]), argv[i]);
        next = replace_all(text, token, eq + 1, &count);
        if (count == 0) {
            fprintf(stderr, "instantiate: unknown anchor %s (not in template)\n", token);
            free(text);
            return 1;
        }
        if (next == NULL) {
            fprintf(stderr, "instantiate: out of memory\n");
            free(text);
            return 2;
        }
        free(text);
        text = next;
    }

    leftover = find_unbound(text, &name_len);
    if (leftover != NULL) {
        fprintf(stderr, "instantiate: missing binding for anchor @%.*s@\n",
                (int)name_len, leftover);
        free(text);
        return 1;
    }

    fputs(text, stdout);
    free(text);
    return 0;
}
