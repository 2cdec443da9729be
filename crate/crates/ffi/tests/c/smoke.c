#include <stdio.h>
#include <string.h>
#include "chemlm.h"

#define CHECK(cond)                                                      \
    do {                                                                 \
        if (!(cond)) {                                                   \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,       \
                    chemlm_last_error() ? chemlm_last_error() : "-");    \
            return 1;                                                    \
        }                                                                \
    } while (0)

int main(void) {
    const char *cif =
        "data_x\n"
        "_cell_length_a 4.000\n_cell_length_b 4.000\n_cell_length_c 4.000\n"
        "_cell_angle_alpha 90.000\n_cell_angle_beta 90.000\n_cell_angle_gamma 90.000\n"
        "loop_\n_atom_site_type_symbol\n_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\n"
        "Sr 0.000 0.000 0.000\nTi 0.500 0.500 0.500\n"
        "O 0.500 0.500 0.000\nO 0.500 0.000 0.500\nO 0.000 0.500 0.500\n";
    ChemlmStructure *s = NULL;
    CHECK(chemlm_structure_parse(CHEMLM_FORMAT_CIF, cif, &s) == CHEMLM_STATUS_OK);

    ChemlmKind kind;
    size_t n = 0;
    CHECK(chemlm_structure_kind(s, &kind) == CHEMLM_STATUS_OK && kind == CHEMLM_KIND_CRYSTAL);
    CHECK(chemlm_structure_atom_count(s, &n) == CHEMLM_STATUS_OK && n == 5);

    bool valid = false;
    CHECK(chemlm_structure_is_valid(s, &valid, NULL) == CHEMLM_STATUS_OK && valid);

    char *key = NULL;
    CHECK(chemlm_structure_key(s, &key) == CHEMLM_STATUS_OK);
    CHECK(strncmp(key, "cry:", 4) == 0);
    printf("%s\n", key);
    chemlm_string_free(key);

    double pos[15];
    size_t len = 0;
    CHECK(chemlm_structure_positions(s, pos, 3, &len) == CHEMLM_STATUS_BUFFER_TOO_SMALL && len == 15);
    CHECK(chemlm_structure_positions(s, pos, 15, &len) == CHEMLM_STATUS_OK);
    CHECK(pos[3] == 2.0);

    ChemlmStructure *bad = NULL;
    CHECK(chemlm_structure_parse(CHEMLM_FORMAT_PDB, "garbage\n", &bad) == CHEMLM_STATUS_PARSE);
    CHECK(bad == NULL && chemlm_last_error() != NULL);

    double a[] = {0.0, 1.0}, b[] = {1.0, 2.0}, d = -1.0;
    CHECK(chemlm_emd_1d(a, 2, b, 2, &d) == CHEMLM_STATUS_OK && d == 1.0);

    chemlm_structure_free(s);
    printf("ok %s\n", chemlm_version());
    return 0;
}
