# PI Bell Certifier
