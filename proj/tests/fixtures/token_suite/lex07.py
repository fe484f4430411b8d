

# leading blank lines above, then comments only


# another comment

